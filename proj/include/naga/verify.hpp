// SPDX-License-Identifier: Apache-2.0
//
// The battery behind `naga verify`: gradient checks, the closed-form
// encoder gradients, exact recovery, the rank condition, factorisation and
// architecture contracts. Each check reports the observed value against its
// tolerance.
#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace naga {

struct CheckResult {
  std::string name;
  bool passed = false;
  double observed = 0.0;
  double tolerance = 0.0;
  bool upper_bound = true;  // pass iff observed < tolerance (else observed > tolerance)
  double seconds = 0.0;
  std::string detail;
};

struct VerifySummary {
  std::vector<CheckResult> checks;

  std::size_t total() const { return checks.size(); }
  std::size_t passed() const;
  std::size_t failed() const { return total() - passed(); }
  bool ok() const { return failed() == 0; }

  std::string to_text() const;
  std::string to_json() const;
};

struct VerifyOptions {
  std::uint64_t seed = 42;
  /// Flips the sign of the closed-form encoder gradients (mutation sanity).
  bool corrupt_lemma2 = false;
  /// Includes the short training comparison between encoder variants.
  bool include_training = true;
};

VerifySummary run_verify(const VerifyOptions& options = {});

// Individual checks, also used by the test suite.
CheckResult check_full_model_gradients(std::uint64_t seed);
CheckResult check_lemma2(bool w2, std::size_t instances, std::uint64_t seed, bool corrupt = false);
CheckResult check_exact_recovery(std::size_t targets, std::uint64_t seed);
CheckResult check_rank_condition(std::uint64_t seed);
CheckResult check_svd_reconstruction(std::uint64_t seed);
CheckResult check_svd_symmetric(std::uint64_t seed);
CheckResult check_diag_embedding(std::uint64_t seed);
CheckResult check_vedic_oracle(std::size_t instances, std::uint64_t seed);
CheckResult check_split_widths();
CheckResult check_unused_branches(std::uint64_t seed);
CheckResult check_conv_causality(std::uint64_t seed);
CheckResult check_layernorm_centering(std::uint64_t seed);
CheckResult check_capacity_ordering(std::uint64_t seed);

}  // namespace naga
