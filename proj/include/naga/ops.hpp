// SPDX-License-Identifier: Apache-2.0
//
// Value-level tensor operations. Every function returns a fresh tensor and
// throws DimensionError on incompatible shapes. Sequence tensors are T x d
// with time on the first axis.
#pragma once

#include <cstddef>

#include "naga/tensor.hpp"

namespace naga {

/// (m x k) . (k x n). Rank-1 operands are not promoted.
Tensor matmul(const Tensor& a, const Tensor& b);

Tensor hadamard(const Tensor& a, const Tensor& b);
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, double s);

/// Adds a length-n bias to every row of an (m x n) tensor.
Tensor add_row_bias(const Tensor& x, const Tensor& bias);

/// Reverses the time (first) axis of a T x d tensor.
Tensor flip_time(const Tensor& x);

double silu(double x);
double sigmoid(double x);
Tensor silu(const Tensor& x);

/// Per-row standardisation over the last axis with population variance:
/// (x - mu) / sqrt(var + eps).
Tensor layernorm_feature(const Tensor& x, double eps);

/// Causal convolution over time. x: T x c_in, w: k x c_in x c_out,
/// bias: c_out. Tap j of the kernel multiplies x[t - j]; rows before the
/// start of the sequence are zero, so y has T rows and y[t] only depends on
/// x[0..t].
Tensor causal_conv1d(const Tensor& x, const Tensor& w, const Tensor& bias);

/// Columns [begin, end) of a 2-D tensor.
Tensor slice_cols(const Tensor& x, std::size_t begin, std::size_t end);
/// Column-wise concatenation of 2-D tensors with equal row counts.
Tensor concat_cols(std::initializer_list<const Tensor*> parts);

/// Last row of a T x c tensor as a length-c vector.
Tensor last_row(const Tensor& x);

double sum(const Tensor& x);

}  // namespace naga
