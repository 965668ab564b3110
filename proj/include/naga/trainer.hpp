// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "naga/autodiff.hpp"
#include "naga/data.hpp"
#include "naga/model.hpp"

namespace naga {

struct TrainConfig {
  double lr = 0.003581;
  double weight_decay = 1e-4;
  std::size_t batch_size = 64;
  std::uint64_t seed = 42;
  std::size_t patience = 5;
  double min_delta = 1e-4;
  std::size_t max_epochs = 100;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double adam_eps = 1e-8;
  /// Caps training windows per epoch (0 = all). Windows are drawn from the
  /// shuffled order, so each epoch sees a different subset.
  std::size_t max_train_windows = 0;

  void validate() const;
};

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct AdamState {
  std::size_t step = 0;
  std::map<std::string, Tensor> m;
  std::map<std::string, Tensor> v;
};

/// Bias-corrected Adam with L2 weight decay folded into the gradient
/// (g += wd * theta) before the moment update.
void adam_step(const std::vector<std::pair<std::string, Tensor*>>& params,
               const ad::Gradients& grads, AdamState& state, const TrainConfig& cfg);

/// Stops after `patience` consecutive epochs whose loss fails to beat the
/// best so far by more than min_delta.
class EarlyStopper {
 public:
  EarlyStopper(std::size_t patience, double min_delta) : patience_(patience), min_delta_(min_delta) {}

  /// Returns true when `loss` counted as an improvement.
  bool observe(double loss);
  bool should_stop() const { return bad_epochs_ >= patience_; }
  double best() const { return best_; }
  std::size_t bad_epochs() const { return bad_epochs_; }

 private:
  std::size_t patience_;
  double min_delta_;
  double best_ = std::numeric_limits<double>::infinity();
  std::size_t bad_epochs_ = 0;
};

struct TrainReport {
  std::vector<double> train_loss;  // mean batch loss per epoch
  std::vector<double> val_mse;     // per-element MSE per epoch
  std::size_t stop_epoch = 0;      // 1-based, last epoch run
  std::size_t best_epoch = 0;      // 1-based, restored weights
  double best_val_mse = 0.0;
  double seconds = 0.0;            // training loop only
  Metrics test;
  bool has_test = false;
  std::size_t parameter_count = 0;
};

/// Eval-mode predictions for every window, in order.
Tensor predict_all(const NagaModel& model, const WindowSet& windows);
Metrics evaluate(const NagaModel& model, const WindowSet& windows);

/// Seeded epoch loop: shuffle, minibatch Adam, validation MSE, early stop,
/// restore best-validation weights, then score the test split.
TrainReport train(NagaModel& model, const WindowedDataset& data, const TrainConfig& cfg);

}  // namespace naga
