// SPDX-License-Identifier: Apache-2.0
//
// Mamba2 processing stage as a fixed pipeline over a T x d_hidden sequence:
//
//   Z             = H W_in + b_in
//   [z, x_bc, dt] = split(Z, [d_inner, d_inner, 2 d_state + h_head])
//   x_bc'         = silu(causal_conv1d(x_bc, W_c, b_c))
//   Y             = layernorm_feature(x_bc', eps)
//   H_mamba       = Y[:, 0 : d_inner / 2]
//
// z and dt are produced by the projection but nothing downstream reads them.
#pragma once

#include <cstddef>

#include "naga/autodiff.hpp"
#include "naga/rng.hpp"
#include "naga/tensor.hpp"

namespace naga {

struct Mamba2Dims {
  std::size_t d_inner = 32;
  std::size_t d_state = 8;
  std::size_t h_head = 4;
  std::size_t kernel = 4;

  std::size_t dt_width() const { return 2 * d_state + h_head; }
  std::size_t proj_width() const { return 2 * d_inner + dt_width(); }
  std::size_t out_width() const { return d_inner / 2; }
  void validate() const;
};

struct Mamba2Params {
  Tensor W_in;  // d_hidden x proj_width
  Tensor b_in;  // proj_width
  Tensor W_c;   // kernel x d_inner x d_inner
  Tensor b_c;   // d_inner
  double eps = 1e-5;
  Mamba2Dims dims;

  std::size_t d_hidden() const { return W_in.dim(0); }
  void validate() const;

  /// W_in uniform in +-1/sqrt(d_hidden), W_c uniform in +-1/sqrt(kernel d_inner),
  /// biases zero.
  static Mamba2Params init(std::size_t d_hidden, Mamba2Dims dims, double eps, Rng& rng);
};

struct SplitWidths {
  std::size_t z, x_bc, dt;
  std::size_t total() const { return z + x_bc + dt; }
};

struct SplitViews {
  Tensor z;
  Tensor x_bc;
  Tensor dt;
};

Tensor project_in(const Tensor& h_vedic, const Mamba2Params& params);
SplitViews split3(const Tensor& z_all, SplitWidths widths);
/// Stages after the split; reads only views.x_bc.
Tensor mamba2_from_split(const SplitViews& views, const Mamba2Params& params);
Tensor mamba2_forward(const Tensor& h_vedic, const Mamba2Params& params);
/// Final time step of a T x c sequence.
Tensor last_step(const Tensor& h_mamba);

struct Mamba2Vars {
  ad::Var W_in, b_in, W_c, b_c;
};
ad::Var mamba2_forward(ad::Var h_vedic, const Mamba2Vars& vars, const Mamba2Params& params);

}  // namespace naga
