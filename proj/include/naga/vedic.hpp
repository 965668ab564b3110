// SPDX-License-Identifier: Apache-2.0
//
// Vedic bilinear encoding. For an input sequence X (T x d_in):
//
//   X1 = X W1 + b1
//   X2 = flip_time(X) W2 + b2
//   H  = (X1 . X2) . D          (elementwise products, D a dropout mask)
//
// so hidden unit i at step t is the product of a projection of x_t with a
// projection of its mirror x_{T-1-t} (0-indexed).
#pragma once

#include <cstddef>

#include "naga/autodiff.hpp"
#include "naga/rng.hpp"
#include "naga/tensor.hpp"

namespace naga {

struct VedicParams {
  Tensor W1;  // d_in x d_hidden
  Tensor W2;  // d_in x d_hidden
  Tensor b1;  // d_hidden
  Tensor b2;  // d_hidden
  double p = 0.0;

  std::size_t d_in() const { return W1.dim(0); }
  std::size_t d_hidden() const { return W1.dim(1); }
  void validate() const;
  bool biases_zero() const;

  /// Weights uniform in +-1/sqrt(d_in), biases zero.
  static VedicParams init(std::size_t d_in, std::size_t d_hidden, double p, Rng& rng);
};

/// Inverted-dropout mask. `scaled` holds 0 or 1/(1-p) and is what the
/// encoder multiplies by; `pattern` keeps the raw keep/drop bits.
struct DropoutMask {
  Tensor scaled;
  Tensor pattern;

  static DropoutMask ones(std::size_t steps, std::size_t d_hidden);
  static DropoutMask sample(std::size_t steps, std::size_t d_hidden, double p, Rng& rng);
};

/// Flip selection is fixed when the encoder is built.
class VedicEncoder {
 public:
  explicit VedicEncoder(bool use_flip = true) : use_flip_(use_flip) {}

  bool use_flip() const { return use_flip_; }

  Tensor encode(const Tensor& x, const VedicParams& params, const DropoutMask& mask) const;

  struct Vars {
    ad::Var W1, W2, b1, b2;
  };
  ad::Var encode(ad::Var x, const Vars& params, const DropoutMask& mask) const;

 private:
  bool use_flip_;
};

Tensor vedic_encode(const Tensor& x, const VedicParams& params, const DropoutMask& mask,
                    bool use_flip = true);

/// Closed-form dL/dW1 for zero biases and a mirrored encoder:
///   g[a, i] = sum_t delta[t, i] D[t, i] (sum_b W2[b, i] x[T-1-t, b]) x[t, a]
/// `delta` is dL/dH at the encoder output. Throws if a bias is nonzero.
Tensor lemma2_grad_w1(const Tensor& x, const VedicParams& params, const DropoutMask& mask,
                      const Tensor& delta);
/// Mirror of lemma2_grad_w1:
///   g[b, i] = sum_t delta[t, i] D[t, i] (sum_a W1[a, i] x[t, a]) x[T-1-t, b]
Tensor lemma2_grad_w2(const Tensor& x, const VedicParams& params, const DropoutMask& mask,
                      const Tensor& delta);

/// Diagonal-projection form on single vectors:
///   H[i] = (x[i] w[i]) * (y[d-1-i] v[i])
Tensor diag_vedic(const Tensor& x, const Tensor& y, const Tensor& w_diag, const Tensor& v_diag);

}  // namespace naga
