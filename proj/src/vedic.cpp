// SPDX-License-Identifier: Apache-2.0
#include "naga/vedic.hpp"

#include <cmath>

#include "naga/ops.hpp"

namespace naga {

void VedicParams::validate() const {
  require_same_shape(W1, W2, "VedicParams W1/W2");
  if (W1.rank() != 2 || b1.rank() != 1 || b2.rank() != 1 || b1.dim(0) != d_hidden() ||
      b2.dim(0) != d_hidden()) {
    throw DimensionError("VedicParams: biases " + b1.shape().str() + ", " + b2.shape().str() +
                         " do not match weights " + W1.shape().str());
  }
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("VedicParams: dropout p must be in [0, 1)");
}

bool VedicParams::biases_zero() const {
  for (double v : b1.data()) {
    if (v != 0.0) return false;
  }
  for (double v : b2.data()) {
    if (v != 0.0) return false;
  }
  return true;
}

VedicParams VedicParams::init(std::size_t d_in, std::size_t d_hidden, double p, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(d_in));
  VedicParams v;
  v.W1 = rng.uniform_tensor(Shape{d_in, d_hidden}, -bound, bound);
  v.W2 = rng.uniform_tensor(Shape{d_in, d_hidden}, -bound, bound);
  v.b1 = Tensor::zeros(Shape{d_hidden});
  v.b2 = Tensor::zeros(Shape{d_hidden});
  v.p = p;
  return v;
}

DropoutMask DropoutMask::ones(std::size_t steps, std::size_t d_hidden) {
  return {Tensor::ones(Shape{steps, d_hidden}), Tensor::ones(Shape{steps, d_hidden})};
}

DropoutMask DropoutMask::sample(std::size_t steps, std::size_t d_hidden, double p, Rng& rng) {
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("dropout p must be in [0, 1)");
  if (p == 0.0) return ones(steps, d_hidden);
  DropoutMask m{Tensor(Shape{steps, d_hidden}), Tensor(Shape{steps, d_hidden})};
  const double keep_scale = 1.0 / (1.0 - p);
  for (std::size_t i = 0; i < m.pattern.size(); ++i) {
    const bool keep = rng.bernoulli(1.0 - p);
    m.pattern[i] = keep ? 1.0 : 0.0;
    m.scaled[i] = keep ? keep_scale : 0.0;
  }
  return m;
}

namespace {

void check_encode_shapes(const Tensor& x, const VedicParams& params, const DropoutMask& mask) {
  params.validate();
  if (x.rank() != 2 || x.dim(1) != params.d_in()) {
    throw DimensionError("vedic_encode: input " + x.shape().str() + " does not match W1 " +
                         params.W1.shape().str());
  }
  if (!(mask.scaled.shape() == Shape{x.dim(0), params.d_hidden()})) {
    throw DimensionError("vedic_encode: mask " + mask.scaled.shape().str() + " expected [" +
                         std::to_string(x.dim(0)) + "x" + std::to_string(params.d_hidden()) + "]");
  }
}

}  // namespace

Tensor VedicEncoder::encode(const Tensor& x, const VedicParams& params,
                            const DropoutMask& mask) const {
  check_encode_shapes(x, params, mask);
  const Tensor x1 = add_row_bias(matmul(x, params.W1), params.b1);
  const Tensor x2 = add_row_bias(matmul(use_flip_ ? flip_time(x) : x, params.W2), params.b2);
  return hadamard(hadamard(x1, x2), mask.scaled);
}

ad::Var VedicEncoder::encode(ad::Var x, const Vars& p, const DropoutMask& mask) const {
  const ad::Var x1 = ad::add_row_bias(ad::matmul(x, p.W1), p.b1);
  const ad::Var x2 = ad::add_row_bias(ad::matmul(use_flip_ ? ad::flip_time(x) : x, p.W2), p.b2);
  const ad::Var d = x.tape->constant(mask.scaled);
  return ad::hadamard(ad::hadamard(x1, x2), d);
}

Tensor vedic_encode(const Tensor& x, const VedicParams& params, const DropoutMask& mask,
                    bool use_flip) {
  return VedicEncoder(use_flip).encode(x, params, mask);
}

namespace {

void check_lemma_inputs(const Tensor& x, const VedicParams& params, const DropoutMask& mask,
                        const Tensor& delta) {
  check_encode_shapes(x, params, mask);
  require_same_shape(delta, mask.scaled, "lemma2 delta");
  if (!params.biases_zero()) {
    throw std::invalid_argument("lemma2 gradient form requires b1 = b2 = 0");
  }
}

// Shared body: g[a, i] = sum_t delta[t,i] D[t,i] (sum_b V[b,i] mirror_src[t',b]) own_src[t,a]
// with t' = T-1-t. For W1 the "own" rows are x_t, for W2 they are x_{T-1-t}.
Tensor lemma2_grad(const Tensor& x, const Tensor& other_w, const DropoutMask& mask,
                   const Tensor& delta, bool own_is_mirror) {
  const std::size_t steps = x.dim(0), d_in = x.dim(1), d_h = other_w.dim(1);
  Tensor g(Shape{d_in, d_h});
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t mirror = steps - 1 - t;
    const std::size_t own_row = own_is_mirror ? mirror : t;
    const std::size_t other_row = own_is_mirror ? t : mirror;
    for (std::size_t i = 0; i < d_h; ++i) {
      double proj = 0.0;
      for (std::size_t b = 0; b < d_in; ++b) proj += other_w.at(b, i) * x.at(other_row, b);
      const double coeff = delta.at(t, i) * mask.scaled.at(t, i) * proj;
      for (std::size_t a = 0; a < d_in; ++a) g.at(a, i) += coeff * x.at(own_row, a);
    }
  }
  return g;
}

}  // namespace

Tensor lemma2_grad_w1(const Tensor& x, const VedicParams& params, const DropoutMask& mask,
                      const Tensor& delta) {
  check_lemma_inputs(x, params, mask, delta);
  return lemma2_grad(x, params.W2, mask, delta, false);
}

Tensor lemma2_grad_w2(const Tensor& x, const VedicParams& params, const DropoutMask& mask,
                      const Tensor& delta) {
  check_lemma_inputs(x, params, mask, delta);
  return lemma2_grad(x, params.W1, mask, delta, true);
}

Tensor diag_vedic(const Tensor& x, const Tensor& y, const Tensor& w_diag, const Tensor& v_diag) {
  require_same_shape(x, y, "diag_vedic");
  require_same_shape(x, w_diag, "diag_vedic");
  require_same_shape(x, v_diag, "diag_vedic");
  if (x.rank() != 1) throw DimensionError("diag_vedic: expected vectors, got " + x.shape().str());
  const std::size_t d = x.size();
  Tensor h(x.shape());
  for (std::size_t i = 0; i < d; ++i) {
    const double projected_x = x[i] * w_diag[i];
    const double projected_rev_y = y[d - 1 - i] * v_diag[i];
    h[i] = projected_x * projected_rev_y;
  }
  return h;
}

}  // namespace naga
