// SPDX-License-Identifier: Apache-2.0
#include "naga/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace naga::kernels {

namespace {
// Below this many multiply-adds a fork/join costs more than it saves.
constexpr std::size_t kParallelWork = 1 << 15;

using Index = std::int64_t;

constexpr std::size_t kRowBlock = 4;

// dst[r][:] += coef(r) * src[:] for up to kRowBlock rows spaced `stride`
// apart, loading src once per column for all rows.
template <class Coef>
inline void rows_axpy(std::size_t rows, std::size_t n, const double* src, double* dst,
                      std::size_t stride, Coef coef) {
  if (rows == kRowBlock) {
    const double c0 = coef(0), c1 = coef(1), c2 = coef(2), c3 = coef(3);
    double* d0 = dst;
    double* d1 = dst + stride;
    double* d2 = dst + 2 * stride;
    double* d3 = dst + 3 * stride;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) {
      const double v = src[j];
      d0[j] += c0 * v;
      d1[j] += c1 * v;
      d2[j] += c2 * v;
      d3[j] += c3 * v;
    }
    return;
  }
  for (std::size_t r = 0; r < rows; ++r) {
    const double cr = coef(r);
    double* dr = dst + r * stride;
#pragma omp simd
    for (std::size_t j = 0; j < n; ++j) dr[j] += cr * src[j];
  }
}
}  // namespace

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_max_threads(int n) {
#ifdef _OPENMP
  if (n >= 1) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

namespace parallel {

void gemm(GemmDims d, std::span<const double> a, std::span<const double> b,
          std::span<double> c) {
  const bool big = d.m * d.k * d.n >= kParallelWork;
  const Index blocks = static_cast<Index>((d.m + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) if (big)
  for (Index bb = 0; bb < blocks; ++bb) {
    const std::size_t i0 = static_cast<std::size_t>(bb) * kRowBlock;
    const std::size_t rows = std::min(kRowBlock, d.m - i0);
    std::fill(c.data() + i0 * d.n, c.data() + (i0 + rows) * d.n, 0.0);
    for (std::size_t p = 0; p < d.k; ++p) {
      rows_axpy(rows, d.n, b.data() + p * d.n, c.data() + i0 * d.n, d.n,
                [&](std::size_t r) { return a[(i0 + r) * d.k + p]; });
    }
  }
}

void gemm_tn_acc(GemmDims d, std::span<const double> a, std::span<const double> b,
                 std::span<double> c) {
  const bool big = d.m * d.k * d.n >= kParallelWork;
  const Index blocks = static_cast<Index>((d.m + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) if (big)
  for (Index bb = 0; bb < blocks; ++bb) {
    const std::size_t i0 = static_cast<std::size_t>(bb) * kRowBlock;
    const std::size_t rows = std::min(kRowBlock, d.m - i0);
    for (std::size_t p = 0; p < d.k; ++p) {
      rows_axpy(rows, d.n, b.data() + p * d.n, c.data() + i0 * d.n, d.n,
                [&](std::size_t r) { return a[p * d.m + i0 + r]; });
    }
  }
}

void gemm_nt_acc(GemmDims d, std::span<const double> a, std::span<const double> b,
                 std::span<double> c) {
  // Transposing B turns the dot products into row updates that vectorise;
  // each C entry still sums over p in increasing order.
  std::vector<double> bt(d.k * d.n);
  for (std::size_t j = 0; j < d.n; ++j)
    for (std::size_t p = 0; p < d.k; ++p) bt[p * d.n + j] = b[j * d.k + p];
  const bool big = d.m * d.k * d.n >= kParallelWork;
  const Index blocks = static_cast<Index>((d.m + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) if (big)
  for (Index bb = 0; bb < blocks; ++bb) {
    const std::size_t i0 = static_cast<std::size_t>(bb) * kRowBlock;
    const std::size_t rows = std::min(kRowBlock, d.m - i0);
    for (std::size_t p = 0; p < d.k; ++p) {
      rows_axpy(rows, d.n, bt.data() + p * d.n, c.data() + i0 * d.n, d.n,
                [&](std::size_t r) { return a[(i0 + r) * d.k + p]; });
    }
  }
}

void causal_conv1d(ConvDims d, std::span<const double> x, std::span<const double> w,
                   std::span<const double> bias, std::span<double> y) {
  const bool big = d.steps * d.taps * d.c_in * d.c_out >= kParallelWork;
  const Index blocks = static_cast<Index>((d.steps + kRowBlock - 1) / kRowBlock);
#pragma omp parallel for schedule(static) if (big)
  for (Index bb = 0; bb < blocks; ++bb) {
    const std::size_t t0 = static_cast<std::size_t>(bb) * kRowBlock;
    const std::size_t rows = std::min(kRowBlock, d.steps - t0);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(bias.begin(), bias.begin() + static_cast<std::ptrdiff_t>(d.c_out),
                y.data() + (t0 + r) * d.c_out);
    }
    for (std::size_t j = 0; j < d.taps; ++j) {
      // Rows t < j see only left padding for this tap.
      std::size_t first = 0;
      while (first < rows && t0 + first < j) ++first;
      if (first == rows) continue;
      for (std::size_t c = 0; c < d.c_in; ++c) {
        rows_axpy(rows - first, d.c_out, w.data() + (j * d.c_in + c) * d.c_out,
                  y.data() + (t0 + first) * d.c_out, d.c_out,
                  [&](std::size_t r) { return x[(t0 + first + r - j) * d.c_in + c]; });
      }
    }
  }
}

void causal_conv1d_backward(ConvDims d, std::span<const double> x, std::span<const double> w,
                            std::span<const double> dy, std::span<double> dx,
                            std::span<double> dw, std::span<double> db) {
  // wt[j][o][c] = w[j][c][o], so dx rows update with contiguous axpys.
  std::vector<double> wt(d.taps * d.c_out * d.c_in);
  for (std::size_t j = 0; j < d.taps; ++j)
    for (std::size_t c = 0; c < d.c_in; ++c)
      for (std::size_t o = 0; o < d.c_out; ++o)
        wt[(j * d.c_out + o) * d.c_in + c] = w[(j * d.c_in + c) * d.c_out + o];

  const bool big = d.steps * d.taps * d.c_in * d.c_out >= kParallelWork;
  const Index step_blocks = static_cast<Index>((d.steps + kRowBlock - 1) / kRowBlock);
  const std::size_t dw_rows = d.taps * d.c_in;
  const Index dw_blocks = static_cast<Index>((dw_rows + kRowBlock - 1) / kRowBlock);
#pragma omp parallel if (big)
  {
#pragma omp for schedule(static) nowait
    for (Index bb = 0; bb < step_blocks; ++bb) {
      const std::size_t s0 = static_cast<std::size_t>(bb) * kRowBlock;
      const std::size_t rows = std::min(kRowBlock, d.steps - s0);
      for (std::size_t j = 0; j < d.taps; ++j) {
        // Rows with s + j past the end receive nothing from this tap.
        std::size_t live = rows;
        while (live > 0 && s0 + live - 1 + j >= d.steps) --live;
        if (live == 0) continue;
        for (std::size_t o = 0; o < d.c_out; ++o) {
          rows_axpy(live, d.c_in, wt.data() + (j * d.c_out + o) * d.c_in, dx.data() + s0 * d.c_in,
                    d.c_in, [&](std::size_t r) { return dy[(s0 + r + j) * d.c_out + o]; });
        }
      }
    }
#pragma omp for schedule(static) nowait
    for (Index bb = 0; bb < dw_blocks; ++bb) {
      const std::size_t row0 = static_cast<std::size_t>(bb) * kRowBlock;
      const std::size_t rows = std::min(kRowBlock, dw_rows - row0);
      // Rows of one block may straddle taps; split them so each run shares j.
      std::size_t r = 0;
      while (r < rows) {
        const std::size_t j = (row0 + r) / d.c_in;
        std::size_t run = 1;
        while (r + run < rows && (row0 + r + run) / d.c_in == j) ++run;
        const std::size_t c0 = (row0 + r) % d.c_in;
        for (std::size_t t = j; t < d.steps; ++t) {
          rows_axpy(run, d.c_out, dy.data() + t * d.c_out, dw.data() + (row0 + r) * d.c_out, d.c_out,
                    [&](std::size_t q) { return x[(t - j) * d.c_in + c0 + q]; });
        }
        r += run;
      }
    }
#pragma omp single
    for (std::size_t o = 0; o < d.c_out; ++o) {
      double acc = db[o];
      for (std::size_t t = 0; t < d.steps; ++t) acc += dy[t * d.c_out + o];
      db[o] = acc;
    }
  }
}

}  // namespace parallel
}  // namespace naga::kernels
