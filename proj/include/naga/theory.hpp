// SPDX-License-Identifier: Apache-2.0
//
// Executable forms of the capacity results for the Vedic encoder: low-rank
// factorisation of a bilinear form, the exact-recovery construction, and the
// ordering between Vedic and affine-encoder models on a bilinear target.
#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>

#include "naga/data.hpp"
#include "naga/model.hpp"
#include "naga/trainer.hpp"
#include "naga/vedic.hpp"

namespace naga {

class UnsupportedTargetError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// C ~= sum_i alpha_i u_i v_i^T with orthonormal u, v and alpha descending.
struct RankFactorization {
  Tensor U;      // d x r
  Tensor V;      // d x r
  Tensor alpha;  // r

  std::size_t rank() const { return alpha.size(); }
  /// sum over the first `terms` components (all by default).
  Tensor reconstruct(std::size_t terms) const;
  Tensor reconstruct() const { return reconstruct(rank()); }
};

/// Full singular values of a square matrix via one-sided Jacobi, descending.
Tensor singular_values(const Tensor& c);

/// Best rank-r approximation (truncated SVD by one-sided Jacobi).
RankFactorization svd_factorize(const Tensor& c, std::size_t r);

/// Encoder weights plus a readout that reproduce a bilinear target:
///   y = sum_{s,i} readout[s,i] H[s,i] + sum_{s,a} linear[s,a] X[s,a]
struct ExactVedic {
  VedicParams params;
  Tensor readout;  // T x d_h
  Tensor linear;   // T x d_in

  double evaluate(const Tensor& window) const;
};

/// Column i of W1 = u_i, column i of W2 = v_i, readout alpha_i at step t,
/// zero biases, no dropout, extra hidden columns zeroed. Needs a mirrored
/// target (t' = T-1-t) and d_h >= rank.
ExactVedic build_exact_vedic(const BilinearTarget& target, std::size_t d_h);

/// Like build_exact_vedic but keeps only the leading d_h components, for
/// d_h below the target rank.
ExactVedic build_truncated_vedic(const BilinearTarget& target, std::size_t d_h);

/// Smallest expected squared error over N(0, I) inputs of any readout at
/// the target step using d_h hidden units: the Eckart-Young tail
/// sum_{i >= d_h} sigma_i^2 of C. Requires t != t'.
double rank_deficient_floor(const BilinearTarget& target, std::size_t d_h);

struct FitResult {
  double train_mse = 0.0;
  double fresh_mse = 0.0;
};

/// Trains W1, W2 (d_h columns) and a step-t readout plus the linear readout
/// on random windows with Adam, then reports MSE on fresh windows.
FitResult fit_vedic_readout(const BilinearTarget& target, std::size_t d_h, std::size_t samples,
                            std::size_t epochs, std::uint64_t seed);

/// Mean squared error of an ExactVedic on `samples` fresh N(0, I) windows.
double exact_vedic_mse(const ExactVedic& model, const BilinearTarget& target,
                       std::size_t samples, std::uint64_t seed);

struct CapacityBudget {
  ModelConfig model;   // use_vedic is overridden per arm
  TrainConfig train;
};

struct CapacityGap {
  double linear_best_mse = 0.0;
  double vedic_best_mse = 0.0;
  TrainReport linear_report;
  TrainReport vedic_report;
};

/// Trains an affine-encoder model and a Vedic model under identical
/// budgets and seeds; returns their best validation MSEs.
CapacityGap capacity_gap(const WindowedDataset& data, const CapacityBudget& budget);

}  // namespace naga
