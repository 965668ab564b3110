// SPDX-License-Identifier: Apache-2.0
#include "naga/ops.hpp"

#include <cmath>

#include "naga/kernels.hpp"

namespace naga {

namespace {

void require_rank(const Tensor& x, std::size_t rank, const char* op) {
  if (x.rank() != rank) {
    throw DimensionError(std::string(op) + ": expected rank " + std::to_string(rank) + ", got " +
                         x.shape().str());
  }
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank(a, 2, "matmul");
  require_rank(b, 2, "matmul");
  if (a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: inner dimensions differ, " + a.shape().str() + " . " +
                         b.shape().str());
  }
  Tensor c(Shape{a.dim(0), b.dim(1)});
  kernels::parallel::gemm({a.dim(0), a.dim(1), b.dim(1)}, a.data(), b.data(), c.data());
  return c;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "hadamard");
  Tensor c(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * b[i];
  return c;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  Tensor c(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] + b[i];
  return c;
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  Tensor c(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] - b[i];
  return c;
}

Tensor scale(const Tensor& a, double s) {
  Tensor c(a.shape());
  for (std::size_t i = 0; i < a.size(); ++i) c[i] = a[i] * s;
  return c;
}

Tensor add_row_bias(const Tensor& x, const Tensor& bias) {
  require_rank(x, 2, "add_row_bias");
  require_rank(bias, 1, "add_row_bias");
  if (bias.dim(0) != x.dim(1)) {
    throw DimensionError("add_row_bias: bias " + bias.shape().str() + " does not fit rows of " +
                         x.shape().str());
  }
  Tensor y = x;
  const std::size_t n = x.dim(1);
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    for (std::size_t j = 0; j < n; ++j) y[i * n + j] += bias[j];
  }
  return y;
}

Tensor flip_time(const Tensor& x) {
  require_rank(x, 2, "flip_time");
  const std::size_t steps = x.dim(0);
  const std::size_t d = x.dim(1);
  Tensor y(x.shape());
  for (std::size_t t = 0; t < steps; ++t) {
    for (std::size_t j = 0; j < d; ++j) y[t * d + j] = x[(steps - 1 - t) * d + j];
  }
  return y;
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double silu(double x) { return x * sigmoid(x); }

Tensor silu(const Tensor& x) {
  Tensor y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = silu(x[i]);
  return y;
}

Tensor layernorm_feature(const Tensor& x, double eps) {
  const std::size_t d = x.cols();
  const std::size_t n = x.rows();
  Tensor y(x.shape());
  for (std::size_t r = 0; r < n; ++r) {
    const double* in = x.data().data() + r * d;
    double* out = y.data().data() + r * d;
    double mu = 0.0;
    for (std::size_t j = 0; j < d; ++j) mu += in[j];
    mu /= static_cast<double>(d);
    double var = 0.0;
    for (std::size_t j = 0; j < d; ++j) var += (in[j] - mu) * (in[j] - mu);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + eps);
    for (std::size_t j = 0; j < d; ++j) out[j] = (in[j] - mu) * inv;
  }
  return y;
}

Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& bias) {
  require_rank(x, 2, "causal_conv1d");
  require_rank(w, 3, "causal_conv1d");
  require_rank(bias, 1, "causal_conv1d");
  if (w.dim(1) != x.dim(1) || bias.dim(0) != w.dim(2)) {
    throw DimensionError("causal_conv1d: input " + x.shape().str() + ", kernel " +
                         w.shape().str() + ", bias " + bias.shape().str() + " are inconsistent");
  }
  const kernels::ConvDims d{x.dim(0), w.dim(1), w.dim(2), w.dim(0)};
  Tensor y(Shape{d.steps, d.c_out});
  kernels::parallel::causal_conv1d(d, x.data(), w.data(), bias.data(), y.data());
  return y;
}

Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end) {
  require_rank(x, 2, "slice_cols");
  if (begin >= end || end > x.dim(1)) {
    throw DimensionError("slice_cols: range [" + std::to_string(begin) + ", " +
                         std::to_string(end) + ") invalid for " + x.shape().str());
  }
  const std::size_t w = end - begin;
  Tensor y(Shape{x.dim(0), w});
  for (std::size_t i = 0; i < x.dim(0); ++i) {
    for (std::size_t j = 0; j < w; ++j) y[i * w + j] = x.at(i, begin + j);
  }
  return y;
}

Tensor concat_cols(std::initializer_list<const Tensor*> parts) {
  if (parts.size() == 0) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = (*parts.begin())->dim(0);
  std::size_t width = 0;
  for (const Tensor* p : parts) {
    require_rank(*p, 2, "concat_cols");
    if (p->dim(0) != rows) {
      throw DimensionError("concat_cols: row counts differ, " + (*parts.begin())->shape().str() +
                           " vs " + p->shape().str());
    }
    width += p->dim(1);
  }
  Tensor y(Shape{rows, width});
  std::size_t offset = 0;
  for (const Tensor* p : parts) {
    for (std::size_t i = 0; i < rows; ++i) {
      for (std::size_t j = 0; j < p->dim(1); ++j) y.at(i, offset + j) = p->at(i, j);
    }
    offset += p->dim(1);
  }
  return y;
}

Tensor last_row(const Tensor& x) {
  require_rank(x, 2, "last_row");
  return x.slab(x.dim(0) - 1);
}

double sum(const Tensor& x) {
  double s = 0.0;
  for (double v : x.data()) s += v;
  return s;
}

}  // namespace naga
