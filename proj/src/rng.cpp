// SPDX-License-Identifier: Apache-2.0
#include "naga/rng.hpp"

#include <cmath>
#include <numbers>

namespace naga {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  // 1 - u keeps the log argument in (0, 1].
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Rng::below(std::uint64_t n) {
  // Rejection sampling, no modulo bias.
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v;
  do {
    v = engine_();
  } while (v >= limit);
  return v % n;
}

Tensor Rng::uniform_tensor(Shape shape, double lo, double hi) {
  Tensor t(shape);
  for (auto& v : t.storage()) v = uniform(lo, hi);
  return t;
}

Tensor Rng::normal_tensor(Shape shape, double stddev) {
  Tensor t(shape);
  for (auto& v : t.storage()) v = stddev * normal();
  return t;
}

Rng Rng::split(std::uint64_t stream) const {
  // splitmix64 finalizer over (seed, stream).
  std::uint64_t z = seed_ + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return Rng(z);
}

}  // namespace naga
