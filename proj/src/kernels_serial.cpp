// SPDX-License-Identifier: Apache-2.0
#include "naga/kernels.hpp"

namespace naga::kernels::serial {

void gemm(GemmDims d, std::span<const double> a, std::span<const double> b,
          std::span<double> c) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double s = 0.0;
      for (std::size_t p = 0; p < d.k; ++p) s += a[i * d.k + p] * b[p * d.n + j];
      c[i * d.n + j] = s;
    }
  }
}

void gemm_tn_acc(GemmDims d, std::span<const double> a, std::span<const double> b,
                 std::span<double> c) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double s = c[i * d.n + j];
      for (std::size_t p = 0; p < d.k; ++p) s += a[p * d.m + i] * b[p * d.n + j];
      c[i * d.n + j] = s;
    }
  }
}

void gemm_nt_acc(GemmDims d, std::span<const double> a, std::span<const double> b,
                 std::span<double> c) {
  for (std::size_t i = 0; i < d.m; ++i) {
    for (std::size_t j = 0; j < d.n; ++j) {
      double s = c[i * d.n + j];
      for (std::size_t p = 0; p < d.k; ++p) s += a[i * d.k + p] * b[j * d.k + p];
      c[i * d.n + j] = s;
    }
  }
}

void causal_conv1d(ConvDims d, std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y) {
  for (std::size_t t = 0; t < d.steps; ++t) {
    for (std::size_t o = 0; o < d.c_out; ++o) {
      double s = bias[o];
      for (std::size_t j = 0; j < d.taps && j <= t; ++j) {
        for (std::size_t c = 0; c < d.c_in; ++c) {
          s += x[(t - j) * d.c_in + c] * w[(j * d.c_in + c) * d.c_out + o];
        }
      }
      y[t * d.c_out + o] = s;
    }
  }
}

void causal_conv1d_backward(ConvDims d, std::span<const double> x, std::span<const double> w,
                            std::span<const double> dy, std::span<double> dx,
                            std::span<double> dw, std::span<double> db) {
  for (std::size_t s = 0; s < d.steps; ++s) {
    for (std::size_t c = 0; c < d.c_in; ++c) {
      double acc = dx[s * d.c_in + c];
      for (std::size_t j = 0; j < d.taps && s + j < d.steps; ++j) {
        for (std::size_t o = 0; o < d.c_out; ++o) {
          acc += dy[(s + j) * d.c_out + o] * w[(j * d.c_in + c) * d.c_out + o];
        }
      }
      dx[s * d.c_in + c] = acc;
    }
  }
  for (std::size_t j = 0; j < d.taps; ++j) {
    for (std::size_t c = 0; c < d.c_in; ++c) {
      for (std::size_t o = 0; o < d.c_out; ++o) {
        double acc = dw[(j * d.c_in + c) * d.c_out + o];
        for (std::size_t t = j; t < d.steps; ++t) {
          acc += x[(t - j) * d.c_in + c] * dy[t * d.c_out + o];
        }
        dw[(j * d.c_in + c) * d.c_out + o] = acc;
      }
    }
  }
  for (std::size_t o = 0; o < d.c_out; ++o) {
    double acc = db[o];
    for (std::size_t t = 0; t < d.steps; ++t) acc += dy[t * d.c_out + o];
    db[o] = acc;
  }
}

}  // namespace naga::kernels::serial
