// SPDX-License-Identifier: Apache-2.0
//
// Raw dense kernels over row-major buffers. Two implementations share one
// signature set:
//
//   naga::kernels::serial    plain loops, the reference the tests check against
//   naga::kernels::parallel  OpenMP over output rows; falls back to one thread
//                            below a work threshold or inside another parallel
//                            region
//
// Both accumulate every output element over the reduction index in the same
// increasing order, so results agree bit-for-bit.
#pragma once

#include <cstddef>
#include <span>

namespace naga::kernels {

struct GemmDims {
  std::size_t m, k, n;
};

struct ConvDims {
  std::size_t steps, c_in, c_out, taps;
};

namespace serial {
// C(m x n) = A(m x k) B(k x n)
void gemm(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
// C(m x n) += A(k x m)^T B(k x n)
void gemm_tn_acc(GemmDims d, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);
// C(m x n) += A(m x k) B(n x k)^T
void gemm_nt_acc(GemmDims d, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);
// y[t, o] = bias[o] + sum_j sum_c x[t - j, c] w[j, c, o], with x[t < 0] = 0
void causal_conv1d(ConvDims d, std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y);
// Accumulates gradients of the forward above into dx, dw, db.
void causal_conv1d_backward(ConvDims d, std::span<const double> x, std::span<const double> w,
                            std::span<const double> dy, std::span<double> dx,
                            std::span<double> dw, std::span<double> db);
}  // namespace serial

namespace parallel {
// C(m x n) = A(m x k) B(k x n)
void gemm(GemmDims d, std::span<const double> a, std::span<const double> b, std::span<double> c);
// C(m x n) += A(k x m)^T B(k x n)
void gemm_tn_acc(GemmDims d, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);
// C(m x n) += A(m x k) B(n x k)^T
void gemm_nt_acc(GemmDims d, std::span<const double> a, std::span<const double> b,
                 std::span<double> c);
// y[t, o] = bias[o] + sum_j sum_c x[t - j, c] w[j, c, o], with x[t < 0] = 0
void causal_conv1d(ConvDims d, std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y);
// Accumulates gradients of the forward above into dx, dw, db.
void causal_conv1d_backward(ConvDims d, std::span<const double> x, std::span<const double> w,
                            std::span<const double> dy, std::span<double> dx,
                            std::span<double> dw, std::span<double> db);
}  // namespace parallel

/// Number of worker threads the parallel kernels and batch loops may use.
int max_threads();
/// Caps the worker pool; values < 1 are ignored.
void set_max_threads(int n);

}  // namespace naga::kernels
