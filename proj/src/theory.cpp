// SPDX-License-Identifier: Apache-2.0
#include "naga/theory.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "naga/autodiff.hpp"
#include "naga/ops.hpp"

namespace naga {

Tensor RankFactorization::reconstruct(std::size_t terms) const {
  const std::size_t d = U.dim(0);
  Tensor c(Shape{d, d});
  for (std::size_t k = 0; k < std::min(terms, rank()); ++k) {
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t b = 0; b < d; ++b) c.at(a, b) += alpha[k] * U.at(a, k) * V.at(b, k);
    }
  }
  return c;
}

namespace {

struct JacobiSvd {
  Tensor u;                    // d x d, columns scaled to unit length (zero if sigma = 0)
  Tensor v;                    // d x d orthogonal
  std::vector<double> sigma;   // descending
};

// One-sided (Hestenes) Jacobi: rotate column pairs of A = C V until they are
// mutually orthogonal, then sigma_j = |a_j| and u_j = a_j / sigma_j.
JacobiSvd jacobi_svd(const Tensor& c) {
  if (c.rank() != 2 || c.dim(0) != c.dim(1)) {
    throw DimensionError("svd: expected a square matrix, got " + c.shape().str());
  }
  const std::size_t d = c.dim(0);
  Tensor a = c;
  Tensor v = Tensor::identity(d);
  for (int sweep = 0; sweep < 100; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < d; ++p) {
      for (std::size_t q = p + 1; q < d; ++q) {
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          alpha += a.at(i, p) * a.at(i, p);
          beta += a.at(i, q) * a.at(i, q);
          gamma += a.at(i, p) * a.at(i, q);
        }
        if (gamma == 0.0 || std::abs(gamma) <= 1e-15 * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double cs = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = cs * t;
        for (std::size_t i = 0; i < d; ++i) {
          const double ap = a.at(i, p), aq = a.at(i, q);
          a.at(i, p) = cs * ap - sn * aq;
          a.at(i, q) = sn * ap + cs * aq;
          const double vp = v.at(i, p), vq = v.at(i, q);
          v.at(i, p) = cs * vp - sn * vq;
          v.at(i, q) = sn * vp + cs * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(d);
  for (std::size_t j = 0; j < d; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < d; ++i) s += a.at(i, j) * a.at(i, j);
    norms[j] = std::sqrt(s);
  }
  std::vector<std::size_t> order(d);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  JacobiSvd out{Tensor(Shape{d, d}), Tensor(Shape{d, d}), std::vector<double>(d)};
  const double tiny = 1e-300;
  for (std::size_t k = 0; k < d; ++k) {
    const std::size_t j = order[k];
    out.sigma[k] = norms[j];
    for (std::size_t i = 0; i < d; ++i) {
      out.u.at(i, k) = norms[j] > tiny ? a.at(i, j) / norms[j] : 0.0;
      out.v.at(i, k) = v.at(i, j);
    }
  }
  return out;
}

}  // namespace

Tensor singular_values(const Tensor& c) { return Tensor::vector(jacobi_svd(c).sigma); }

RankFactorization svd_factorize(const Tensor& c, std::size_t r) {
  if (c.rank() != 2 || c.dim(0) != c.dim(1)) {
    throw DimensionError("svd_factorize: expected a square matrix, got " + c.shape().str());
  }
  const std::size_t d = c.dim(0);
  if (r > d) {
    throw std::invalid_argument("svd_factorize: rank " + std::to_string(r) + " exceeds dimension " +
                                std::to_string(d));
  }
  if (r == 0) throw std::invalid_argument("svd_factorize: rank must be positive");
  const JacobiSvd svd = jacobi_svd(c);
  RankFactorization f{Tensor(Shape{d, r}), Tensor(Shape{d, r}), Tensor(Shape{r})};
  for (std::size_t k = 0; k < r; ++k) {
    f.alpha[k] = svd.sigma[k];
    for (std::size_t i = 0; i < d; ++i) {
      f.U.at(i, k) = svd.u.at(i, k);
      f.V.at(i, k) = svd.v.at(i, k);
    }
  }
  return f;
}

double ExactVedic::evaluate(const Tensor& window) const {
  const Tensor h = vedic_encode(window, params, DropoutMask::ones(window.dim(0), params.d_hidden()));
  double y = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) y += readout[i] * h[i];
  for (std::size_t i = 0; i < window.size(); ++i) y += linear[i] * window[i];
  return y;
}

namespace {

ExactVedic assemble(const BilinearTarget& target, const RankFactorization& f, std::size_t d_h,
                    std::size_t terms) {
  const std::size_t d = target.dim(), steps = target.steps();
  ExactVedic out;
  out.params.W1 = Tensor(Shape{d, d_h});
  out.params.W2 = Tensor(Shape{d, d_h});
  out.params.b1 = Tensor::zeros(Shape{d_h});
  out.params.b2 = Tensor::zeros(Shape{d_h});
  out.params.p = 0.0;
  out.readout = Tensor(Shape{steps, d_h});
  for (std::size_t i = 0; i < terms; ++i) {
    for (std::size_t a = 0; a < d; ++a) {
      out.params.W1.at(a, i) = f.U.at(a, i);
      out.params.W2.at(a, i) = f.V.at(a, i);
    }
    out.readout.at(target.t, i) = f.alpha[i];
  }
  out.linear = target.linear;
  return out;
}

void require_mirrored(const BilinearTarget& target) {
  if (!target.mirrored()) {
    throw UnsupportedTargetError("target pairs steps " + std::to_string(target.t) + " and " +
                                 std::to_string(target.t_prime) +
                                 "; the encoder only forms mirrored pairs t' = T-1-t");
  }
}

}  // namespace

ExactVedic build_exact_vedic(const BilinearTarget& target, std::size_t d_h) {
  require_mirrored(target);
  const std::size_t r = target.rank;
  if (d_h < r) {
    throw std::invalid_argument("build_exact_vedic: hidden width " + std::to_string(d_h) +
                                " below target rank " + std::to_string(r));
  }
  if (r == 0) throw std::invalid_argument("build_exact_vedic: target has rank 0");
  return assemble(target, svd_factorize(target.C, r), d_h, r);
}

ExactVedic build_truncated_vedic(const BilinearTarget& target, std::size_t d_h) {
  require_mirrored(target);
  if (d_h == 0) throw std::invalid_argument("build_truncated_vedic: d_h must be positive");
  const std::size_t terms = std::min(d_h, target.dim());
  return assemble(target, svd_factorize(target.C, terms), d_h, terms);
}

double rank_deficient_floor(const BilinearTarget& target, std::size_t d_h) {
  if (target.t == target.t_prime) {
    throw UnsupportedTargetError("rank_deficient_floor: t and t' coincide; the bound assumes independent steps");
  }
  const Tensor sigma = singular_values(target.C);
  double tail = 0.0;
  for (std::size_t i = d_h; i < sigma.size(); ++i) tail += sigma[i] * sigma[i];
  return tail;
}

double exact_vedic_mse(const ExactVedic& model, const BilinearTarget& target, std::size_t samples,
                       std::uint64_t seed) {
  Rng rng(seed);
  double se = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    const Tensor x = rng.normal_tensor(Shape{target.steps(), target.dim()});
    const double e = model.evaluate(x) - target.evaluate(x);
    se += e * e;
  }
  return se / static_cast<double>(samples);
}

FitResult fit_vedic_readout(const BilinearTarget& target, std::size_t d_h, std::size_t samples,
                            std::size_t epochs, std::uint64_t seed) {
  require_mirrored(target);
  const std::size_t steps = target.steps(), d = target.dim();
  Rng rng(seed);
  std::vector<Tensor> xs;
  std::vector<double> ys;
  for (std::size_t s = 0; s < samples; ++s) {
    xs.push_back(rng.normal_tensor(Shape{steps, d}));
    ys.push_back(target.evaluate(xs.back()));
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(d));
  Tensor w1 = rng.uniform_tensor(Shape{d, d_h}, -bound, bound);
  Tensor w2 = rng.uniform_tensor(Shape{d, d_h}, -bound, bound);
  Tensor r = rng.uniform_tensor(Shape{d_h, 1}, -1.0, 1.0);
  Tensor lin = Tensor::zeros(Shape{steps, d});
  Tensor pick = Tensor::zeros(Shape{1, steps});
  pick[target.t] = 1.0;
  const Tensor zero_bias = Tensor::zeros(Shape{d_h});
  const VedicEncoder encoder(true);
  const DropoutMask mask = DropoutMask::ones(steps, d_h);

  TrainConfig cfg;
  cfg.lr = 0.01;
  cfg.weight_decay = 0.0;
  AdamState adam;
  std::vector<std::pair<std::string, Tensor*>> params{{"W1", &w1}, {"W2", &w2}, {"r", &r}, {"L", &lin}};

  double last_train = 0.0;
  for (std::size_t epoch = 0; epoch < epochs; ++epoch) {
    ad::Tape tape;
    const VedicEncoder::Vars vars{tape.param_ref("W1", w1), tape.param_ref("W2", w2),
                                  tape.constant(zero_bias), tape.constant(zero_bias)};
    const ad::Var rv = tape.param_ref("r", r);
    const ad::Var lv = tape.param_ref("L", lin);
    const ad::Var pv = tape.constant(pick);
    ad::Var total{};
    for (std::size_t s = 0; s < samples; ++s) {
      const ad::Var x = tape.constant(xs[s]);
      const ad::Var h = encoder.encode(x, vars, mask);
      const ad::Var quad = ad::matmul(ad::matmul(pv, h), rv);  // 1 x 1
      const ad::Var pred = ad::add(ad::reshape(quad, Shape{1}), ad::sum(ad::hadamard(lv, x)));
      const ad::Var err = ad::sum_squares(ad::sub(pred, tape.constant(Tensor::vector({ys[s]}))));
      total = s == 0 ? err : ad::add(total, err);
    }
    const ad::Var loss = ad::scale(total, 1.0 / static_cast<double>(samples));
    last_train = tape.value(loss)[0];
    adam_step(params, tape.grads(loss), adam, cfg);
  }

  ExactVedic fitted;
  fitted.params = {w1, w2, zero_bias, zero_bias, 0.0};
  fitted.readout = Tensor(Shape{steps, d_h});
  for (std::size_t i = 0; i < d_h; ++i) fitted.readout.at(target.t, i) = r[i];
  fitted.linear = lin;
  return {last_train, exact_vedic_mse(fitted, target, 2000, seed + 1)};
}

CapacityGap capacity_gap(const WindowedDataset& data, const CapacityBudget& budget) {
  CapacityGap gap;
  for (bool vedic : {false, true}) {
    ModelConfig cfg = budget.model;
    cfg.use_vedic = vedic;
    Rng init(budget.train.seed);
    NagaModel model = NagaModel::init(cfg, init);
    TrainReport rep = train(model, data, budget.train);
    if (vedic) {
      gap.vedic_best_mse = rep.best_val_mse;
      gap.vedic_report = std::move(rep);
    } else {
      gap.linear_best_mse = rep.best_val_mse;
      gap.linear_report = std::move(rep);
    }
  }
  return gap;
}

}  // namespace naga
