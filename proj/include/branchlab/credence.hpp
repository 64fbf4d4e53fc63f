#pragma once

// The probability rules: Born weights read off a decohered agent+detector
// operator, branch counting (Indifference), and the observer-weight rule,
// together with the equal-amplitude refinement that turns Born weights into
// a count of equal components.

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "branchlab/branching.hpp"
#include "branchlab/qstate.hpp"

namespace branchlab {

class CredenceTable {
 public:
  CredenceTable() = default;
  /// Checks every entry lies in [0,1] and the entries sum to 1 within `tol`.
  explicit CredenceTable(std::map<std::string, double> entries, double tol = kDefaultTol);

  const std::map<std::string, double>& entries() const noexcept { return entries_; }
  /// Probability of `key`; 0 for hypotheses not in the table.
  double operator[](const std::string& key) const;
  bool contains(const std::string& key) const { return entries_.count(key) != 0; }
  std::size_t size() const noexcept { return entries_.size(); }

  bool operator==(const CredenceTable&) const = default;

 private:
  std::map<std::string, double> entries_;
};

/// Largest |a[k] - b[k]| over the union of keys.
double max_deviation(const CredenceTable& a, const CredenceTable& b);

CredenceTable born_credences(const DensityOperator& rho_ad, std::span<const std::string> pointers,
                             double eps = decoherence_eps());

/// P(branch) = copies on the branch / total copies, weights ignored.
CredenceTable indifference_credences(const BranchSet& bs, const std::map<std::string, std::size_t>& copies_per_branch);

struct RationalWeights {
  std::vector<std::uint64_t> c_squared;
  std::uint64_t t_squared = 1;
  double approximation_error = 0.0;
};

/// Common-denominator approximation c_k^2 / T^2 of `weights`, minimizing the
/// largest per-weight error over T^2 <= max_denominator; ties go to the
/// smallest T^2.
RationalWeights rationalize(std::span<const double> weights, std::uint64_t max_denominator = 10000);

/// Splits every environment record E_k into (1/c_k) sum_j |E_k>|j>_ancilla by
/// a unitary controlled on the record. The ancilla factor (dim max c_k^2) is
/// appended to the space.
StateVector equal_amplitude_refine(const StateVector& s, const RationalWeights& rw, const std::string& env,
                                   const std::string& ancilla = "anc");

struct CountedCredences {
  CredenceTable table;
  std::map<std::string, std::uint64_t> counts;
  std::uint64_t total = 0;
  double approximation_error = 0.0;
};

/// Rationalizes the branch weights, refines to equal amplitudes, and counts
/// the refined components per detector record.
CountedCredences refine_and_count(const StateVector& s, const std::string& detector, const std::string& env,
                                  std::uint64_t max_denominator = 100);

struct EspReport {
  CredenceTable before;
  CredenceTable after;
  double max_deviation = 0.0;
  bool pass = false;
};

/// Born credences over `pointers`, read from the reduced operator on
/// `observed`, before and after an environment-only unitary.
EspReport esp_invariance_check(const StateVector& s, const UnitaryOp& u_env, std::span<const std::string> observed,
                               std::span<const std::string> pointers);

struct ObserverCopy {
  std::string id;
  std::string branch;
  int time = 0;
  double weight = 0.0;

  /// "id[branch]@time"; unique per copy.
  std::string key() const;
  bool operator==(const ObserverCopy&) const = default;
};

/// P(copy i) = w_i / sum_j w_j.
CredenceTable strong_esp(std::span<const ObserverCopy> copies);

/// Uniform over the copies.
CredenceTable indifference_over_copies(std::span<const ObserverCopy> copies);

struct PageObserver {
  ObserverCopy copy;
  double up_amp_sq = 0.0;
  double down_amp_sq = 0.0;
};

/// P(up) = sum_i P(O_i) |gamma_i|^2 with P(O_i) from strong_esp.
double page_aggregate(std::span<const PageObserver> observers);

struct SwapReport {
  std::size_t i = 0;
  std::size_t j = 0;
  double weight_gap = 0.0;
  double rho_deviation = 0.0;
  bool pass = false;  ///< entails P(i) == P(j)
};

/// Exchanges the environment records of components i and j (indices into
/// components(s, record_labels)) and compares the reduced operator on
/// `observed` before and after.
SwapReport swap_check(const StateVector& s, std::span<const std::string> record_labels, std::size_t i, std::size_t j,
                      std::span<const std::string> observed);

struct SwapClosure {
  bool equiprobable = false;
  CredenceTable table;  ///< uniform over components, keyed by component index
  std::vector<SwapReport> reports;
};

/// swap_check over every pair, closed under transitivity.
SwapClosure swap_closure(const StateVector& s, std::span<const std::string> record_labels,
                         std::span<const std::string> observed);

/// sum_k amplitudes[k] |R>_A |d_{outcomes[k]}>_D |E_k>_E with detector symbols
/// "R", "d0", "d1", ... and environment records "E0", "E1", ...
StateVector branch_state(std::span<const cplx> amplitudes, std::span<const std::size_t> outcomes,
                         std::size_t n_outcomes);

}  // namespace branchlab
