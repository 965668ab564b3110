// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <random>

#include "naga/tensor.hpp"

namespace naga {

/// Seeded PRNG. The engine is std::mt19937_64, whose output sequence is fixed
/// by the C++ standard. Uniform and normal variates are derived here rather
/// than through <random> distributions, which are implementation-defined.
///
///   uniform(): top 53 bits of one draw scaled by 2^-53, in [0, 1)
///   normal():  Box-Muller on two uniforms, no cached second variate
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 42) : seed_(seed), engine_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t next_u64() { return engine_(); }

  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  bool bernoulli(double p) { return uniform() < p; }
  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  Tensor uniform_tensor(Shape shape, double lo, double hi);
  Tensor normal_tensor(Shape shape, double stddev = 1.0);

  /// Independent child stream; deterministic in (seed, stream).
  Rng split(std::uint64_t stream) const;

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace naga
