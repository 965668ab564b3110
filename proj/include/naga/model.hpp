// SPDX-License-Identifier: Apache-2.0
//
// The assembled forecaster. For one input window X (T x d_in):
//
//   h = X                         (optionally input-masked in training)
//   for each cell c:
//     if c > 0: h = h W_bridge + b_bridge      (d_inner/2 -> d_in)
//     e = vedic(h)  or  h when the encoder is disabled
//     h = mamba2(e)               (T x d_inner/2)
//   y_hat = h[T-1] W_head + b_head (pred_len)
#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "naga/autodiff.hpp"
#include "naga/mamba2.hpp"
#include "naga/rng.hpp"
#include "naga/tensor.hpp"
#include "naga/vedic.hpp"

namespace naga {

struct ModelConfig {
  std::size_t d_in = 7;
  std::size_t d_hidden = 32;
  std::size_t d_inner = 32;
  std::size_t d_state = 8;
  std::size_t h_head = 4;
  std::size_t kernel = 4;
  std::size_t pred_len = 96;
  std::size_t num_cells = 2;
  bool use_vedic = true;
  bool use_flip = true;
  double mask_prob = 0.0;
  double dropout_p = 0.0;
  double eps = 1e-5;

  Mamba2Dims mamba_dims() const { return {d_inner, d_state, h_head, kernel}; }
  /// Width entering the Mamba2 projection.
  std::size_t encoded_width() const { return use_vedic ? d_hidden : d_in; }
  void validate() const;
};

enum class Mode { kTrain, kEval };

struct CellParams {
  std::optional<VedicParams> vedic;
  Mamba2Params mamba;
};

struct BridgeParams {
  Tensor W;  // (d_inner/2) x d_in
  Tensor b;  // d_in
};

struct HeadParams {
  Tensor W_head;  // (d_inner/2) x pred_len
  Tensor b_head;  // pred_len
};

/// Per-sample stochastic inputs for a training forward pass. Empty tensors
/// mean "no masking".
struct SampleNoise {
  Tensor input_keep;                // T x d_in of {0, 1}
  std::vector<DropoutMask> dropout;  // one per cell
};

class NagaModel {
 public:
  static NagaModel init(const ModelConfig& cfg, Rng& rng);

  const ModelConfig& config() const { return cfg_; }
  std::vector<CellParams>& cells() { return cells_; }
  const std::vector<CellParams>& cells() const { return cells_; }
  std::vector<BridgeParams>& bridges() { return bridges_; }
  const std::vector<BridgeParams>& bridges() const { return bridges_; }
  HeadParams& head() { return head_; }
  const HeadParams& head() const { return head_; }

  /// Every trainable tensor under a stable dotted name, in a fixed order.
  std::vector<std::pair<std::string, Tensor*>> named_parameters();
  std::vector<std::pair<std::string, const Tensor*>> named_parameters() const;
  std::size_t parameter_count() const;
  static std::size_t analytic_parameter_count(const ModelConfig& cfg);

  /// X: B x T x d_in -> B x pred_len. Eval mode ignores rng.
  Tensor forward(const Tensor& x, Mode mode, Rng& rng) const;
  /// Single window with explicit noise (empty noise = eval behaviour).
  Tensor predict(const Tensor& window, const SampleNoise& noise) const;

  SampleNoise sample_noise(std::size_t steps, Rng& rng) const;

  /// Records the forward pass for one window on `tape`, registering every
  /// parameter under its dotted name. Returns the pred_len output.
  ad::Var record(ad::Tape& tape, const Tensor& window, const SampleNoise& noise) const;

 private:
  explicit NagaModel(ModelConfig cfg) : cfg_(std::move(cfg)) {}

  ModelConfig cfg_;
  std::vector<CellParams> cells_;
  std::vector<BridgeParams> bridges_;
  HeadParams head_;
};

/// Training loss: mean over the batch of squared Euclidean error norms.
double mse_loss(const Tensor& y_hat, const Tensor& y);

struct Metrics {
  double mse = 0.0;
  double mae = 0.0;
  double rmse = 0.0;
};

/// Per-element means over every prediction entry.
Metrics metrics(const Tensor& y_hat, const Tensor& y);

struct BatchGradients {
  double loss = 0.0;
  ad::Gradients grads;
};

/// Loss (mse_loss over the batch) and its gradient for every parameter.
/// `noise` holds one entry per sample; pass an empty vector for eval-style
/// passes. Samples are processed in fixed chunks whose partial sums are
/// combined in order, so results do not depend on the thread count.
BatchGradients loss_and_grads(const NagaModel& model, const Tensor& x, const Tensor& y,
                              const std::vector<SampleNoise>& noise);

}  // namespace naga
