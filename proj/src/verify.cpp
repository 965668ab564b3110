// SPDX-License-Identifier: Apache-2.0
#include "naga/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

#include "json.hpp"
#include "naga/autodiff.hpp"
#include "naga/data.hpp"
#include "naga/mamba2.hpp"
#include "naga/model.hpp"
#include "naga/ops.hpp"
#include "naga/theory.hpp"
#include "naga/vedic.hpp"

namespace naga {

std::size_t VerifySummary::passed() const {
  return static_cast<std::size_t>(
      std::count_if(checks.begin(), checks.end(), [](const CheckResult& c) { return c.passed; }));
}

std::string VerifySummary::to_text() const {
  std::ostringstream os;
  char buf[256];
  for (const CheckResult& c : checks) {
    std::snprintf(buf, sizeof buf, "%s %-32s observed %.3e %s %.1e  (%.2f s)", c.passed ? "PASS" : "FAIL",
                  c.name.c_str(), c.observed, c.upper_bound ? "<" : ">", c.tolerance, c.seconds);
    os << buf;
    if (!c.detail.empty()) os << "  " << c.detail;
    os << '\n';
  }
  os << total() << " checks: " << passed() << " passed, " << failed() << " failed\n";
  return os.str();
}

std::string VerifySummary::to_json() const {
  nlohmann::json j;
  j["total"] = total();
  j["passed"] = passed();
  j["failed"] = failed();
  j["checks"] = nlohmann::json::array();
  for (const CheckResult& c : checks) {
    j["checks"].push_back({{"name", c.name},
                           {"passed", c.passed},
                           {"observed", c.observed},
                           {"tolerance", c.tolerance},
                           {"comparison", c.upper_bound ? "<" : ">"},
                           {"seconds", c.seconds},
                           {"detail", c.detail}});
  }
  return j.dump(2);
}

namespace {

using Clock = std::chrono::steady_clock;

CheckResult finish(std::string name, double observed, double tolerance, bool upper,
                   Clock::time_point started, std::string detail = {}) {
  CheckResult c;
  c.name = std::move(name);
  c.observed = observed;
  c.tolerance = tolerance;
  c.upper_bound = upper;
  c.passed = std::isfinite(observed) && (upper ? observed < tolerance : observed > tolerance);
  c.seconds = std::chrono::duration<double>(Clock::now() - started).count();
  c.detail = std::move(detail);
  return c;
}

ModelConfig gradcheck_config() {
  ModelConfig cfg;
  cfg.d_in = 3;
  cfg.d_hidden = 8;
  cfg.d_inner = 8;
  cfg.d_state = 2;
  cfg.h_head = 2;
  cfg.kernel = 2;
  cfg.pred_len = 2;
  cfg.num_cells = 2;
  cfg.mask_prob = 0.2;
  cfg.dropout_p = 0.2;
  return cfg;
}

std::size_t pick(Rng& rng, std::size_t lo, std::size_t hi) {
  return lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
}

BilinearTarget random_target(Rng& rng, std::size_t d, std::size_t r, std::size_t steps, std::size_t t) {
  BilinearTarget tg;
  tg.C = random_rank_matrix(d, r, rng.next_u64());
  tg.rank = r;
  tg.t = t;
  tg.t_prime = steps - 1 - t;
  tg.linear = rng.normal_tensor(Shape{steps, d}, 0.5);
  return tg;
}

}  // namespace

CheckResult check_full_model_gradients(std::uint64_t seed) {
  const auto started = Clock::now();
  const ModelConfig cfg = gradcheck_config();
  const std::size_t steps = 8, batch = 3;
  Rng rng(seed);
  NagaModel model = NagaModel::init(cfg, rng);
  // Non-zero biases so their gradients are exercised away from the init point.
  for (auto& [name, t] : model.named_parameters()) {
    if (name.find(".b") != std::string::npos) *t = rng.uniform_tensor(t->shape(), -0.3, 0.3);
  }
  const Tensor x = rng.normal_tensor(Shape{batch, steps, cfg.d_in});
  const Tensor y = rng.normal_tensor(Shape{batch, cfg.pred_len});
  std::vector<SampleNoise> noise(batch);
  for (auto& n : noise) n = model.sample_noise(steps, rng);

  const BatchGradients analytic = loss_and_grads(model, x, y, noise);
  auto loss = [&]() {
    Tensor pred(Shape{batch, cfg.pred_len});
    for (std::size_t b = 0; b < batch; ++b) {
      const Tensor p = model.predict(x.slab(b), noise[b]);
      for (std::size_t j = 0; j < cfg.pred_len; ++j) pred.at(b, j) = p[j];
    }
    return mse_loss(pred, y);
  };

  double worst = 0.0;
  std::string worst_name;
  for (auto& [name, theta] : model.named_parameters()) {
    const Tensor saved = *theta;
    const Tensor numeric = ad::finite_diff(
        [&](const Tensor& v) {
          *theta = v;
          return loss();
        },
        saved, 1e-5);
    *theta = saved;
    const double err = max_rel_diff(analytic.grads.at(name), numeric, 1e-6);
    if (err > worst) {
      worst = err;
      worst_name = name;
    }
  }
  return finish("grad_check.full_model", worst, 1e-5, true, started,
                std::to_string(model.parameter_count()) + " params, worst " + worst_name);
}

CheckResult check_lemma2(bool w2, std::size_t instances, std::uint64_t seed, bool corrupt) {
  const auto started = Clock::now();
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t steps = pick(rng, 1, 8), d_in = pick(rng, 1, 5), d_h = pick(rng, 1, 5);
    const double p = 0.5 * rng.uniform();
    VedicParams params = VedicParams::init(d_in, d_h, p, rng);
    const Tensor x = rng.normal_tensor(Shape{steps, d_in});
    const DropoutMask mask = DropoutMask::sample(steps, d_h, p, rng);
    const Tensor delta = rng.normal_tensor(Shape{steps, d_h});

    Tensor closed = w2 ? lemma2_grad_w2(x, params, mask, delta) : lemma2_grad_w1(x, params, mask, delta);
    if (corrupt) closed = scale(closed, -1.0);

    ad::Tape tape;
    const VedicEncoder::Vars vars{tape.param_ref("W1", params.W1), tape.param_ref("W2", params.W2),
                                  tape.param_ref("b1", params.b1), tape.param_ref("b2", params.b2)};
    const ad::Var h = VedicEncoder(true).encode(tape.constant(x), vars, mask);
    const ad::Var readout = ad::sum(ad::hadamard(h, tape.constant(delta)));
    const ad::Gradients g = tape.grads(readout);
    worst = std::max(worst, max_abs_diff(closed, g.at(w2 ? "W2" : "W1")));
  }
  return finish(w2 ? "lemma2.grad_w2" : "lemma2.grad_w1", worst, 1e-10, true, started,
                std::to_string(instances) + " instances");
}

CheckResult check_exact_recovery(std::size_t targets, std::uint64_t seed) {
  const auto started = Clock::now();
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t n = 0; n < targets; ++n) {
    const std::size_t r = pick(rng, 1, 3);
    const std::size_t d = pick(rng, std::max<std::size_t>(r, 1), 6);
    const std::size_t steps = pick(rng, 2, 10);
    const std::size_t t = pick(rng, 0, steps - 1);
    const BilinearTarget tg = random_target(rng, d, r, steps, t);
    const ExactVedic model = build_exact_vedic(tg, r + pick(rng, 0, 2));
    for (int s = 0; s < 20; ++s) {
      const Tensor x = rng.normal_tensor(Shape{steps, d});
      worst = std::max(worst, std::abs(model.evaluate(x) - tg.evaluate(x)));
    }
  }
  return finish("recovery.exact", worst, 1e-8, true, started,
                std::to_string(targets) + " targets x 20 inputs");
}

CheckResult check_rank_condition(std::uint64_t seed) {
  const auto started = Clock::now();
  Rng rng(seed);
  // Even T keeps t != t' so x_t and x_t' are independent.
  const std::size_t d = 4, r = 3, steps = 6;
  const BilinearTarget tg = random_target(rng, d, r, steps, steps - 1);
  const double floor = rank_deficient_floor(tg, r - 1);
  const double truncated = exact_vedic_mse(build_truncated_vedic(tg, r - 1), tg, 20000, rng.next_u64());
  const FitResult fit = fit_vedic_readout(tg, r - 1, 256, 300, rng.next_u64());
  const double observed = std::min({floor, truncated, fit.fresh_mse});
  std::ostringstream detail;
  detail.precision(4);
  detail << "floor " << floor << ", truncated " << truncated << ", trained " << fit.fresh_mse;
  return finish("recovery.rank_floor", observed, 1e-3, false, started, detail.str());
}

CheckResult check_svd_reconstruction(std::uint64_t seed) {
  const auto started = Clock::now();
  Rng rng(seed);
  double worst = 0.0;
  for (int n = 0; n < 20; ++n) {
    const std::size_t d = pick(rng, 2, 6);
    const Tensor c = random_rank_matrix(d, 2, rng.next_u64());
    worst = std::max(worst, max_abs_diff(svd_factorize(c, 2).reconstruct(), c));
  }
  return finish("svd.rank2_reconstruction", worst, 1e-12, true, started);
}

CheckResult check_svd_symmetric(std::uint64_t seed) {
  const auto started = Clock::now();
  Rng rng(seed);
  const Tensor a = rng.normal_tensor(Shape{3, 3});
  Tensor c(Shape{3, 3});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 3; ++j)
      for (std::size_t k = 0; k < 3; ++k) c.at(i, j) += a.at(i, k) * a.at(j, k);
  // For symmetric PSD C each factor satisfies C u = alpha u.
  const RankFactorization f = svd_factorize(c, 3);
  double worst = 0.0;
  for (std::size_t k = 0; k < 3; ++k) {
    for (std::size_t i = 0; i < 3; ++i) {
      double cu = 0.0;
      for (std::size_t j = 0; j < 3; ++j) cu += c.at(i, j) * f.U.at(j, k);
      worst = std::max(worst, std::abs(cu - f.alpha[k] * f.U.at(i, k)));
    }
  }
  return finish("svd.symmetric_eigenpairs", worst, 1e-10, true, started);
}

CheckResult check_diag_embedding(std::uint64_t seed) {
  const auto started = Clock::now();
  Rng rng(seed);
  double worst = 0.0;
  for (int n = 0; n < 50; ++n) {
    const std::size_t d = pick(rng, 1, 6);
    const Tensor x = rng.normal_tensor(Shape{d}), y = rng.normal_tensor(Shape{d});
    const Tensor w = rng.normal_tensor(Shape{d}), v = rng.normal_tensor(Shape{d});
    VedicParams p{Tensor(Shape{d, d}), Tensor(Shape{d, d}), Tensor::zeros(Shape{d}), Tensor::zeros(Shape{d}), 0.0};
    for (std::size_t i = 0; i < d; ++i) {
      p.W1.at(i, i) = w[i];
      p.W2.at(d - 1 - i, i) = v[i];
    }
    // Two-step window [x; y]: step 0 pairs x with the flipped row y.
    Tensor seq(Shape{2, d});
    for (std::size_t i = 0; i < d; ++i) {
      seq.at(0, i) = x[i];
      seq.at(1, i) = y[i];
    }
    const Tensor h = vedic_encode(seq, p, DropoutMask::ones(2, d));
    worst = std::max(worst, max_abs_diff(h.slab(0), diag_vedic(x, y, w, v)));
  }
  return finish("vedic.diag_embedding", worst, 1e-12, true, started);
}

CheckResult check_vedic_oracle(std::size_t instances, std::uint64_t seed) {
  const auto started = Clock::now();
  Rng rng(seed);
  double worst = 0.0;
  for (std::size_t n = 0; n < instances; ++n) {
    const std::size_t steps = pick(rng, 1, 8), d_in = pick(rng, 1, 5), d_h = pick(rng, 1, 5);
    VedicParams p = VedicParams::init(d_in, d_h, 0.3, rng);
    p.b1 = rng.normal_tensor(Shape{d_h});
    p.b2 = rng.normal_tensor(Shape{d_h});
    const Tensor x = rng.normal_tensor(Shape{steps, d_in});
    const DropoutMask mask = DropoutMask::sample(steps, d_h, 0.3, rng);
    const Tensor h = vedic_encode(x, p, mask);
    for (std::size_t t = 0; t < steps; ++t) {
      for (std::size_t i = 0; i < d_h; ++i) {
        double a = p.b1[i], b = p.b2[i];
        for (std::size_t k = 0; k < d_in; ++k) {
          a += x.at(t, k) * p.W1.at(k, i);
          b += x.at(steps - 1 - t, k) * p.W2.at(k, i);
        }
        worst = std::max(worst, std::abs(h.at(t, i) - a * b * mask.scaled.at(t, i)));
      }
    }
  }
  return finish("vedic.loop_oracle", worst, 1e-12, true, started, std::to_string(instances) + " instances");
}

CheckResult check_split_widths() {
  const auto started = Clock::now();
  const Mamba2Dims dims{8, 2, 2, 2};
  Rng rng(1);
  const Tensor z = rng.normal_tensor(Shape{5, dims.proj_width()});
  const SplitViews v = split3(z, {dims.d_inner, dims.d_inner, dims.dt_width()});
  ModelConfig cfg = gradcheck_config();
  const NagaModel model = NagaModel::init(cfg, rng);
  const bool ok = v.z.cols() == 8 && v.x_bc.cols() == 8 && v.dt.cols() == 2 * 2 + 2 &&
                  concat_cols({&v.z, &v.x_bc, &v.dt}) == z &&
                  model.head().W_head.dim(0) == cfg.d_inner / 2 && model.head().W_head.dim(1) == cfg.pred_len;
  return finish("mamba2.split_and_head_shapes", ok ? 0.0 : 1.0, 0.5, true, started,
                "split (8, 8, 6), head 4x2");
}

CheckResult check_unused_branches(std::uint64_t seed) {
  const auto started = Clock::now();
  Rng rng(seed);
  const Mamba2Dims dims{8, 2, 2, 3};
  Mamba2Params p = Mamba2Params::init(5, dims, 1e-5, rng);
  p.b_in = rng.normal_tensor(p.b_in.shape());
  const Tensor h = rng.normal_tensor(Shape{7, 5});
  const Tensor before = mamba2_forward(h, p);
  for (std::size_t r = 0; r < p.W_in.dim(0); ++r) {
    for (std::size_t c = 0; c < dims.proj_width(); ++c) {
      if (c < dims.d_inner || c >= 2 * dims.d_inner) p.W_in.at(r, c) = 0.0;
    }
  }
  for (std::size_t c = 0; c < dims.proj_width(); ++c) {
    if (c < dims.d_inner || c >= 2 * dims.d_inner) p.b_in[c] = 0.0;
  }
  return finish("mamba2.unused_branches", max_abs_diff(before, mamba2_forward(h, p)), 1e-300, true, started,
                "z and dt columns zeroed");
}

CheckResult check_conv_causality(std::uint64_t seed) {
  const auto started = Clock::now();
  Rng rng(seed);
  double changed = 0.0;
  for (int n = 0; n < 20; ++n) {
    const std::size_t steps = pick(rng, 2, 10), c = pick(rng, 1, 4), k = pick(rng, 1, 4);
    const Tensor w = rng.normal_tensor(Shape{k, c, c});
    const Tensor b = rng.normal_tensor(Shape{c});
    Tensor x = rng.normal_tensor(Shape{steps, c});
    const Tensor y0 = causal_conv1d(x, w, b);
    const std::size_t t0 = pick(rng, 1, steps - 1);
    for (std::size_t j = 0; j < c; ++j) x.at(t0, j) += 1.0;
    const Tensor y1 = causal_conv1d(x, w, b);
    for (std::size_t t = 0; t < t0; ++t)
      for (std::size_t j = 0; j < c; ++j) changed = std::max(changed, std::abs(y1.at(t, j) - y0.at(t, j)));
  }
  return finish("conv.causality", changed, 1e-300, true, started);
}

CheckResult check_layernorm_centering(std::uint64_t seed) {
  const auto started = Clock::now();
  Rng rng(seed);
  double worst = 0.0;
  for (int n = 0; n < 50; ++n) {
    const Tensor x = rng.normal_tensor(Shape{pick(rng, 1, 6), pick(rng, 2, 16)}, 3.0);
    const Tensor y = layernorm_feature(x, 1e-5);
    for (std::size_t r = 0; r < y.dim(0); ++r) {
      double m = 0.0;
      for (std::size_t c = 0; c < y.dim(1); ++c) m += y.at(r, c);
      worst = std::max(worst, std::abs(m / static_cast<double>(y.dim(1))));
    }
  }
  return finish("layernorm.centering", worst, 1e-12, true, started);
}

CheckResult check_capacity_ordering(std::uint64_t seed) {
  const auto started = Clock::now();
  SynthSpec spec;
  spec.rows = 1500;
  spec.window = 8;
  spec.d_in = 3;
  spec.rank = 1;
  spec.noise = 0.01;
  spec.seed = seed;
  const SynthSeries series = synth_bilinear(spec);
  const WindowedDataset data =
      build_dataset(series.table, SplitSpec::ratio(0.7, 0.15, 0.15), spec.window, 1, series.table.features() - 1);
  CapacityBudget budget;
  budget.model.d_in = data.features();
  budget.model.d_hidden = 8;
  budget.model.d_inner = 8;
  budget.model.d_state = 2;
  budget.model.h_head = 2;
  budget.model.kernel = 2;
  budget.model.pred_len = 1;
  budget.model.num_cells = 2;
  budget.train.lr = 0.01;
  budget.train.batch_size = 32;
  budget.train.max_epochs = 30;
  budget.train.seed = seed;
  const CapacityGap gap = capacity_gap(data, budget);
  std::ostringstream detail;
  detail.precision(4);
  detail << "vedic " << gap.vedic_best_mse << ", affine " << gap.linear_best_mse;
  return finish("capacity.vedic_vs_affine", gap.vedic_best_mse / gap.linear_best_mse, 1.0, true, started,
                detail.str());
}

VerifySummary run_verify(const VerifyOptions& options) {
  const std::uint64_t s = options.seed;
  VerifySummary summary;
  summary.checks.push_back(check_full_model_gradients(s));
  summary.checks.push_back(check_lemma2(false, 100, s + 1, options.corrupt_lemma2));
  summary.checks.push_back(check_lemma2(true, 100, s + 2, options.corrupt_lemma2));
  summary.checks.push_back(check_exact_recovery(50, s + 3));
  summary.checks.push_back(check_rank_condition(s + 4));
  summary.checks.push_back(check_svd_reconstruction(s + 5));
  summary.checks.push_back(check_svd_symmetric(s + 6));
  summary.checks.push_back(check_diag_embedding(s + 7));
  summary.checks.push_back(check_vedic_oracle(200, s + 8));
  summary.checks.push_back(check_split_widths());
  summary.checks.push_back(check_unused_branches(s + 9));
  summary.checks.push_back(check_conv_causality(s + 10));
  summary.checks.push_back(check_layernorm_centering(s + 11));
  if (options.include_training) summary.checks.push_back(check_capacity_ordering(s));
  return summary;
}

}  // namespace naga
