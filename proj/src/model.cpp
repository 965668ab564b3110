// SPDX-License-Identifier: Apache-2.0
#include "naga/model.hpp"

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "naga/ops.hpp"

namespace naga {

void ModelConfig::validate() const {
  if (d_in == 0 || d_hidden == 0 || pred_len == 0 || num_cells == 0) {
    throw std::invalid_argument("model dims and num_cells must be positive");
  }
  mamba_dims().validate();
  if (!(mask_prob >= 0.0 && mask_prob < 1.0)) throw std::invalid_argument("mask_prob must be in [0, 1)");
  if (!(dropout_p >= 0.0 && dropout_p < 1.0)) throw std::invalid_argument("dropout_p must be in [0, 1)");
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
}

NagaModel NagaModel::init(const ModelConfig& cfg, Rng& rng) {
  cfg.validate();
  NagaModel m(cfg);
  const std::size_t half = cfg.d_inner / 2;
  for (std::size_t c = 0; c < cfg.num_cells; ++c) {
    if (c > 0) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(half));
      m.bridges_.push_back({rng.uniform_tensor(Shape{half, cfg.d_in}, -bound, bound),
                            Tensor::zeros(Shape{cfg.d_in})});
    }
    CellParams cell;
    if (cfg.use_vedic) cell.vedic = VedicParams::init(cfg.d_in, cfg.d_hidden, cfg.dropout_p, rng);
    cell.mamba = Mamba2Params::init(cfg.encoded_width(), cfg.mamba_dims(), cfg.eps, rng);
    m.cells_.push_back(std::move(cell));
  }
  const double bound = 1.0 / std::sqrt(static_cast<double>(half));
  m.head_ = {rng.uniform_tensor(Shape{half, cfg.pred_len}, -bound, bound),
             Tensor::zeros(Shape{cfg.pred_len})};
  return m;
}

std::vector<std::pair<std::string, Tensor*>> NagaModel::named_parameters() {
  std::vector<std::pair<std::string, Tensor*>> out;
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const std::string p = "cell" + std::to_string(c) + ".";
    if (c > 0) {
      const std::string b = "bridge" + std::to_string(c - 1) + ".";
      out.emplace_back(b + "W", &bridges_[c - 1].W);
      out.emplace_back(b + "b", &bridges_[c - 1].b);
    }
    if (auto& v = cells_[c].vedic) {
      out.emplace_back(p + "vedic.W1", &v->W1);
      out.emplace_back(p + "vedic.W2", &v->W2);
      out.emplace_back(p + "vedic.b1", &v->b1);
      out.emplace_back(p + "vedic.b2", &v->b2);
    }
    auto& mb = cells_[c].mamba;
    out.emplace_back(p + "mamba.W_in", &mb.W_in);
    out.emplace_back(p + "mamba.b_in", &mb.b_in);
    out.emplace_back(p + "mamba.W_c", &mb.W_c);
    out.emplace_back(p + "mamba.b_c", &mb.b_c);
  }
  out.emplace_back("head.W", &head_.W_head);
  out.emplace_back("head.b", &head_.b_head);
  return out;
}

std::vector<std::pair<std::string, const Tensor*>> NagaModel::named_parameters() const {
  auto mut = const_cast<NagaModel*>(this)->named_parameters();
  std::vector<std::pair<std::string, const Tensor*>> out;
  out.reserve(mut.size());
  for (auto& [n, t] : mut) out.emplace_back(std::move(n), t);
  return out;
}

std::size_t NagaModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& [name, t] : named_parameters()) n += t->size();
  return n;
}

std::size_t NagaModel::analytic_parameter_count(const ModelConfig& cfg) {
  const std::size_t half = cfg.d_inner / 2;
  const std::size_t proj = cfg.mamba_dims().proj_width();
  const std::size_t vedic = cfg.use_vedic ? 2 * cfg.d_in * cfg.d_hidden + 2 * cfg.d_hidden : 0;
  const std::size_t mamba = cfg.encoded_width() * proj + proj +
                            cfg.kernel * cfg.d_inner * cfg.d_inner + cfg.d_inner;
  const std::size_t bridge = half * cfg.d_in + cfg.d_in;
  const std::size_t head = half * cfg.pred_len + cfg.pred_len;
  return cfg.num_cells * (vedic + mamba) + (cfg.num_cells - 1) * bridge + head;
}

SampleNoise NagaModel::sample_noise(std::size_t steps, Rng& rng) const {
  SampleNoise noise;
  if (cfg_.mask_prob > 0.0) {
    noise.input_keep = Tensor(Shape{steps, cfg_.d_in});
    for (auto& v : noise.input_keep.storage()) v = rng.bernoulli(cfg_.mask_prob) ? 0.0 : 1.0;
  }
  if (cfg_.use_vedic && cfg_.dropout_p > 0.0) {
    for (std::size_t c = 0; c < cfg_.num_cells; ++c) {
      noise.dropout.push_back(DropoutMask::sample(steps, cfg_.d_hidden, cfg_.dropout_p, rng));
    }
  }
  return noise;
}

namespace {

void check_window(const Tensor& window, const ModelConfig& cfg) {
  if (window.rank() != 2 || window.dim(1) != cfg.d_in) {
    throw DimensionError("model input window " + window.shape().str() + " expected [T x " +
                         std::to_string(cfg.d_in) + "]");
  }
}

}  // namespace

Tensor NagaModel::predict(const Tensor& window, const SampleNoise& noise) const {
  check_window(window, cfg_);
  const std::size_t steps = window.dim(0);
  Tensor h = noise.input_keep.size() ? hadamard(window, noise.input_keep) : window;
  const VedicEncoder encoder(cfg_.use_flip);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    if (c > 0) h = add_row_bias(matmul(h, bridges_[c - 1].W), bridges_[c - 1].b);
    if (cells_[c].vedic) {
      const DropoutMask mask =
          noise.dropout.empty() ? DropoutMask::ones(steps, cfg_.d_hidden) : noise.dropout[c];
      h = encoder.encode(h, *cells_[c].vedic, mask);
    }
    h = mamba2_forward(h, cells_[c].mamba);
  }
  const Tensor last = last_step(h).reshaped(Shape{1, cfg_.d_inner / 2});
  return add_row_bias(matmul(last, head_.W_head), head_.b_head).reshaped(Shape{cfg_.pred_len});
}

ad::Var NagaModel::record(ad::Tape& tape, const Tensor& window, const SampleNoise& noise) const {
  check_window(window, cfg_);
  const std::size_t steps = window.dim(0);
  ad::Var h = tape.constant(noise.input_keep.size() ? hadamard(window, noise.input_keep) : window);
  const VedicEncoder encoder(cfg_.use_flip);
  for (std::size_t c = 0; c < cells_.size(); ++c) {
    const std::string p = "cell" + std::to_string(c) + ".";
    if (c > 0) {
      const std::string b = "bridge" + std::to_string(c - 1) + ".";
      h = ad::add_row_bias(ad::matmul(h, tape.param_ref(b + "W", bridges_[c - 1].W)),
                           tape.param_ref(b + "b", bridges_[c - 1].b));
    }
    if (const auto& v = cells_[c].vedic) {
      const VedicEncoder::Vars vars{tape.param_ref(p + "vedic.W1", v->W1),
                                    tape.param_ref(p + "vedic.W2", v->W2),
                                    tape.param_ref(p + "vedic.b1", v->b1),
                                    tape.param_ref(p + "vedic.b2", v->b2)};
      const DropoutMask mask =
          noise.dropout.empty() ? DropoutMask::ones(steps, cfg_.d_hidden) : noise.dropout[c];
      h = encoder.encode(h, vars, mask);
    }
    const auto& mb = cells_[c].mamba;
    const Mamba2Vars mv{tape.param_ref(p + "mamba.W_in", mb.W_in),
                        tape.param_ref(p + "mamba.b_in", mb.b_in),
                        tape.param_ref(p + "mamba.W_c", mb.W_c),
                        tape.param_ref(p + "mamba.b_c", mb.b_c)};
    h = mamba2_forward(h, mv, mb);
  }
  const ad::Var last = ad::reshape(ad::last_row(h), Shape{1, cfg_.d_inner / 2});
  const ad::Var out = ad::add_row_bias(ad::matmul(last, tape.param_ref("head.W", head_.W_head)),
                                       tape.param_ref("head.b", head_.b_head));
  return ad::reshape(out, Shape{cfg_.pred_len});
}

Tensor NagaModel::forward(const Tensor& x, Mode mode, Rng& rng) const {
  if (x.rank() != 3 || x.dim(2) != cfg_.d_in) {
    throw DimensionError("forward: expected B x T x " + std::to_string(cfg_.d_in) + ", got " +
                         x.shape().str());
  }
  if (!x.all_finite()) throw std::invalid_argument("forward: input contains non-finite values");
  const std::size_t batch = x.dim(0), steps = x.dim(1);
  std::vector<SampleNoise> noise(batch);
  if (mode == Mode::kTrain) {
    for (auto& n : noise) n = sample_noise(steps, rng);
  }
  Tensor out(Shape{batch, cfg_.pred_len});
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(batch); ++i) {
    const auto b = static_cast<std::size_t>(i);
    const Tensor y = predict(x.slab(b), noise[b]);
    for (std::size_t j = 0; j < cfg_.pred_len; ++j) out.at(b, j) = y[j];
  }
  return out;
}

double mse_loss(const Tensor& y_hat, const Tensor& y) {
  require_same_shape(y_hat, y, "mse_loss");
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += (y_hat[i] - y[i]) * (y_hat[i] - y[i]);
  return s / static_cast<double>(y.dim(0));
}

Metrics metrics(const Tensor& y_hat, const Tensor& y) {
  require_same_shape(y_hat, y, "metrics");
  double se = 0.0, ae = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double e = y_hat[i] - y[i];
    se += e * e;
    ae += std::abs(e);
  }
  const double n = static_cast<double>(y.size());
  return {se / n, ae / n, std::sqrt(se / n)};
}

namespace {
constexpr std::size_t kSamplesPerChunk = 4;
}  // namespace

BatchGradients loss_and_grads(const NagaModel& model, const Tensor& x, const Tensor& y,
                              const std::vector<SampleNoise>& noise) {
  const ModelConfig& cfg = model.config();
  if (x.rank() != 3 || y.rank() != 2 || x.dim(0) != y.dim(0) || y.dim(1) != cfg.pred_len) {
    throw DimensionError("loss_and_grads: inputs " + x.shape().str() + " and targets " +
                         y.shape().str() + " are inconsistent");
  }
  const std::size_t batch = x.dim(0);
  if (!noise.empty() && noise.size() != batch) {
    throw std::invalid_argument("loss_and_grads: one noise entry per sample required");
  }
  const std::size_t chunks = (batch + kSamplesPerChunk - 1) / kSamplesPerChunk;
  std::vector<ad::Gradients> partial(chunks);
  std::vector<double> partial_loss(chunks, 0.0);
  const SampleNoise none;

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(chunks); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    const std::size_t end = std::min(batch, (c + 1) * kSamplesPerChunk);
    for (std::size_t b = c * kSamplesPerChunk; b < end; ++b) {
      ad::Tape tape;
      const ad::Var pred = model.record(tape, x.slab(b), noise.empty() ? none : noise[b]);
      const ad::Var target = tape.constant(y.slab(b));
      const ad::Var loss = ad::sum_squares(ad::sub(pred, target));
      partial_loss[c] += tape.value(loss)[0];
      ad::Gradients g = tape.grads(loss);
      if (partial[c].size() == 0) {
        partial[c] = std::move(g);
      } else {
        for (const auto& [name, t] : g) {
          Tensor& acc = partial[c].mutable_at(name);
          for (std::size_t i = 0; i < t.size(); ++i) acc[i] += t[i];
        }
      }
    }
  }

  BatchGradients out;
  out.grads = std::move(partial[0]);
  out.loss = partial_loss[0];
  for (std::size_t c = 1; c < chunks; ++c) {
    out.loss += partial_loss[c];
    for (const auto& [name, t] : partial[c]) {
      Tensor& acc = out.grads.mutable_at(name);
      for (std::size_t i = 0; i < t.size(); ++i) acc[i] += t[i];
    }
  }
  const double inv_b = 1.0 / static_cast<double>(batch);
  out.loss *= inv_b;
  for (const auto& [name, t] : out.grads) {
    Tensor& acc = out.grads.mutable_at(name);
    for (auto& v : acc.storage()) v *= inv_b;
  }
  return out;
}

}  // namespace naga
