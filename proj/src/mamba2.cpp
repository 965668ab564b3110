// SPDX-License-Identifier: Apache-2.0
#include "naga/mamba2.hpp"

#include <cmath>

#include "naga/ops.hpp"

namespace naga {

void Mamba2Dims::validate() const {
  if (d_inner < 2 || d_inner % 2 != 0) {
    throw std::invalid_argument("d_inner must be even and >= 2, got " + std::to_string(d_inner));
  }
  if (d_state == 0 || h_head == 0 || kernel == 0) {
    throw std::invalid_argument("d_state, h_head and kernel must be positive");
  }
}

void Mamba2Params::validate() const {
  dims.validate();
  if (W_in.rank() != 2 || W_in.dim(1) != dims.proj_width() || b_in.rank() != 1 ||
      b_in.dim(0) != dims.proj_width()) {
    throw DimensionError("Mamba2Params: W_in " + W_in.shape().str() + " / b_in " +
                         b_in.shape().str() + " do not match projection width " +
                         std::to_string(dims.proj_width()));
  }
  if (!(W_c.shape() == Shape{dims.kernel, dims.d_inner, dims.d_inner}) ||
      !(b_c.shape() == Shape{dims.d_inner})) {
    throw DimensionError("Mamba2Params: conv kernel " + W_c.shape().str() + " / bias " +
                         b_c.shape().str() + " do not match dims");
  }
  if (!(eps > 0.0)) throw std::invalid_argument("Mamba2Params: eps must be positive");
}

Mamba2Params Mamba2Params::init(std::size_t d_hidden, Mamba2Dims dims, double eps, Rng& rng) {
  dims.validate();
  Mamba2Params p;
  p.dims = dims;
  p.eps = eps;
  const double in_bound = 1.0 / std::sqrt(static_cast<double>(d_hidden));
  const double conv_bound = 1.0 / std::sqrt(static_cast<double>(dims.kernel * dims.d_inner));
  p.W_in = rng.uniform_tensor(Shape{d_hidden, dims.proj_width()}, -in_bound, in_bound);
  p.b_in = Tensor::zeros(Shape{dims.proj_width()});
  p.W_c = rng.uniform_tensor(Shape{dims.kernel, dims.d_inner, dims.d_inner}, -conv_bound, conv_bound);
  p.b_c = Tensor::zeros(Shape{dims.d_inner});
  return p;
}

Tensor project_in(const Tensor& h_vedic, const Mamba2Params& params) {
  if (h_vedic.rank() != 2 || h_vedic.dim(1) != params.d_hidden()) {
    throw DimensionError("project_in: input " + h_vedic.shape().str() + " does not match W_in " +
                         params.W_in.shape().str());
  }
  return add_row_bias(matmul(h_vedic, params.W_in), params.b_in);
}

SplitViews split3(const Tensor& z_all, SplitWidths widths) {
  if (z_all.rank() != 2 || z_all.dim(1) != widths.total()) {
    throw DimensionError("split3: width of " + z_all.shape().str() + " != " +
                         std::to_string(widths.z) + "+" + std::to_string(widths.x_bc) + "+" +
                         std::to_string(widths.dt));
  }
  const std::size_t a = widths.z, b = a + widths.x_bc;
  return {slice_cols(z_all, 0, a), slice_cols(z_all, a, b), slice_cols(z_all, b, widths.total())};
}

Tensor mamba2_from_split(const SplitViews& views, const Mamba2Params& params) {
  const Tensor conv = silu(causal_conv1d(views.x_bc, params.W_c, params.b_c));
  const Tensor y_hidden = layernorm_feature(conv, params.eps);
  return slice_cols(y_hidden, 0, params.dims.out_width());
}

Tensor mamba2_forward(const Tensor& h_vedic, const Mamba2Params& params) {
  params.validate();
  const Tensor z_all = project_in(h_vedic, params);
  const auto& d = params.dims;
  return mamba2_from_split(split3(z_all, {d.d_inner, d.d_inner, d.dt_width()}), params);
}

Tensor last_step(const Tensor& h_mamba) {
  if (h_mamba.rank() != 2 || h_mamba.size() == 0) {
    throw std::invalid_argument("last_step: empty or non-sequence input " + h_mamba.shape().str());
  }
  return last_row(h_mamba);
}

ad::Var mamba2_forward(ad::Var h_vedic, const Mamba2Vars& v, const Mamba2Params& params) {
  const auto& d = params.dims;
  const ad::Var z_all = ad::add_row_bias(ad::matmul(h_vedic, v.W_in), v.b_in);
  // z = cols [0, d_inner) and dt = cols [2 d_inner, end) are not consumed.
  const ad::Var x_bc = ad::slice_cols(z_all, d.d_inner, 2 * d.d_inner);
  const ad::Var conv = ad::silu(ad::causal_conv1d(x_bc, v.W_c, v.b_c));
  const ad::Var y_hidden = ad::layernorm_feature(conv, params.eps);
  return ad::slice_cols(y_hidden, 0, d.out_width());
}

}  // namespace naga
