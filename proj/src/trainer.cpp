// SPDX-License-Identifier: Apache-2.0
#include "naga/trainer.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace naga {

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !(weight_decay >= 0.0) || batch_size == 0 || patience == 0 ||
      max_epochs == 0 || !(min_delta >= 0.0) || !(adam_eps > 0.0) || !(beta1 >= 0.0 && beta1 < 1.0) ||
      !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("invalid training configuration");
  }
}

void adam_step(const std::vector<std::pair<std::string, Tensor*>>& params,
               const ad::Gradients& grads, AdamState& state, const TrainConfig& cfg) {
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (const auto& [name, theta] : params) {
    const Tensor& g = grads.at(name);
    require_same_shape(*theta, g, "adam_step");
    auto [mit, mnew] = state.m.try_emplace(name, Tensor::zeros(theta->shape()));
    auto [vit, vnew] = state.v.try_emplace(name, Tensor::zeros(theta->shape()));
    Tensor& m = mit->second;
    Tensor& v = vit->second;
    for (std::size_t i = 0; i < theta->size(); ++i) {
      const double gi = g[i] + cfg.weight_decay * (*theta)[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * gi;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * gi * gi;
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      (*theta)[i] -= cfg.lr * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
  }
}

bool EarlyStopper::observe(double loss) {
  if (best_ - loss > min_delta_) {
    best_ = loss;
    bad_epochs_ = 0;
    return true;
  }
  ++bad_epochs_;
  return false;
}

Tensor predict_all(const NagaModel& model, const WindowSet& windows) {
  const std::size_t n = windows.size();
  const std::size_t h = model.config().pred_len;
  Tensor out(Shape{n, h});
  const SampleNoise none;
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(n); ++i) {
    const auto w = static_cast<std::size_t>(i);
    const Tensor y = model.predict(windows.x.slab(w), none);
    for (std::size_t j = 0; j < h; ++j) out.at(w, j) = y[j];
  }
  return out;
}

Metrics evaluate(const NagaModel& model, const WindowSet& windows) {
  return metrics(predict_all(model, windows), windows.y);
}

namespace {

std::vector<Tensor> snapshot(const NagaModel& model) {
  std::vector<Tensor> out;
  for (const auto& [name, t] : model.named_parameters()) out.push_back(*t);
  return out;
}

void restore(NagaModel& model, const std::vector<Tensor>& saved) {
  auto params = model.named_parameters();
  for (std::size_t i = 0; i < params.size(); ++i) *params[i].second = saved[i];
}

}  // namespace

TrainReport train(NagaModel& model, const WindowedDataset& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.train.empty() || data.val.empty()) {
    throw std::invalid_argument("train: dataset needs non-empty train and validation splits");
  }
  if (data.horizon != model.config().pred_len || data.features() != model.config().d_in) {
    throw DimensionError("train: dataset (features " + std::to_string(data.features()) +
                         ", horizon " + std::to_string(data.horizon) +
                         ") does not match the model configuration");
  }
  const auto started = std::chrono::steady_clock::now();
  Rng rng(cfg.seed);
  AdamState adam;
  EarlyStopper stopper(cfg.patience, cfg.min_delta);
  TrainReport report;
  report.parameter_count = model.parameter_count();
  std::vector<Tensor> best = snapshot(model);

  const std::size_t n = data.train.size();
  std::vector<std::size_t> order(n);
  const std::size_t steps = data.lookback;

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = n; i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);
    const std::size_t used = cfg.max_train_windows ? std::min(n, cfg.max_train_windows) : n;

    double loss_sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t begin = 0; begin < used; begin += cfg.batch_size) {
      const std::size_t end = std::min(used, begin + cfg.batch_size);
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(begin),
                                         order.begin() + static_cast<std::ptrdiff_t>(end));
      const WindowSet batch = data.train.gather(idx);
      std::vector<SampleNoise> noise(idx.size());
      for (auto& s : noise) s = model.sample_noise(steps, rng);
      BatchGradients bg = loss_and_grads(model, batch.x, batch.y, noise);
      if (!std::isfinite(bg.loss)) {
        std::ostringstream msg;
        msg << "non-finite training loss at epoch " << epoch << ", batch " << batches;
        throw TrainingError(msg.str());
      }
      adam_step(model.named_parameters(), bg.grads, adam, cfg);
      loss_sum += bg.loss;
      ++batches;
    }
    report.train_loss.push_back(loss_sum / static_cast<double>(batches));

    const double val = evaluate(model, data.val).mse;
    if (!std::isfinite(val)) {
      throw TrainingError("non-finite validation MSE at epoch " + std::to_string(epoch));
    }
    report.val_mse.push_back(val);
    report.stop_epoch = epoch;
    if (stopper.observe(val)) {
      best = snapshot(model);
      report.best_epoch = epoch;
      report.best_val_mse = val;
    }
    if (stopper.should_stop()) break;
  }
  restore(model, best);
  report.seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  if (!data.test.empty()) {
    report.test = evaluate(model, data.test);
    report.has_test = true;
  }
  return report;
}

}  // namespace naga
