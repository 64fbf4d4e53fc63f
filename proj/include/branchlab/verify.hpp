#pragma once

// Seeded property suites. Trial k of a suite draws from trial_rng(seed, k)
// only, so any trial can be replayed alone and results do not depend on the
// thread count.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace branchlab {

enum class Suite { AppendixB, AppendixC, Proofs, StrongEsp };

std::string_view to_string(Suite s) noexcept;
/// "appendix-b", "appendix-c", "proofs", "strong-esp"; InvalidArgument otherwise.
Suite parse_suite(std::string_view s);

struct TrialResult {
  std::uint64_t index = 0;
  bool pass = false;
  double max_deviation = 0.0;
  std::string detail;

  bool operator==(const TrialResult&) const = default;
};

// Single checks. Each returns pass/fail with the largest deviation seen.

/// Tr_B after U_A (x) U_B equals U_A rho_A U_A^dag, and a unitary on the
/// complement of A leaves rho_A alone; tolerance 1e-12.
TrialResult reduced_dynamics_trial(std::uint64_t seed, std::uint64_t index);
/// Born credences survive a random environment unitary; tolerance 1e-10.
TrialResult esp_environment_trial(std::uint64_t seed, std::uint64_t index);
/// Counting refined components reproduces Born (1e-9) and refinement keeps
/// rho_AD (1e-12), for N <= 6 branches with T^2 <= 50 and random phases.
TrialResult appendix_c_trial(std::uint64_t seed, std::uint64_t index);
/// Trial 0 and 1 replay the two hand proofs; later trials replay the general
/// proof on random rational weights.
TrialResult proof_trial(std::uint64_t seed, std::uint64_t index);
/// Strong ESP limits (equal weights, one copy per branch), scale and phase
/// invariance, and swap closure on equal-amplitude states.
TrialResult strong_esp_trial(std::uint64_t seed, std::uint64_t index);

TrialResult run_trial(Suite suite, std::uint64_t seed, std::uint64_t index);

struct SuiteResult {
  Suite suite = Suite::AppendixB;
  std::uint64_t seed = 0;
  std::uint64_t start = 0;
  std::vector<TrialResult> trials;  ///< ordered by index

  bool pass() const;
  const TrialResult* first_failure() const;
};

/// Trials start .. start+count-1, fanned out over OpenMP threads unless
/// `parallel` is false.
SuiteResult run_suite(Suite suite, std::uint64_t count, std::uint64_t seed, std::uint64_t start = 0,
                      bool parallel = true);

}  // namespace branchlab
