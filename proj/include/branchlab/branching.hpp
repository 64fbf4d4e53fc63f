#pragma once

// Measurement as entanglement with detector pointer states and fresh
// environment records, and decomposition of reduced operators into branches.
//
// Detector convention: basis index 0 is the ready state, indices 1..K record
// outcome k-1 of a K-outcome measurement, and index K+1 (when present) is the
// "not measured" record written by a conditional measurement whose condition
// fails.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "branchlab/qstate.hpp"

namespace branchlab {

/// Threshold below which off-diagonal pointer blocks count as decohered and
/// branch weights count as absent. BRANCHLAB_EPS overrides the 1e-10 default.
double decoherence_eps();

struct MeasureSpec {
  std::string system;
  std::string detector;
  std::string env;
  /// Columns are the orthonormal measurement basis of `system`; empty means
  /// the computational basis.
  CMatrix basis;
  /// Overlap <E_i|E_j> between sibling records; 0 gives exactly orthogonal records.
  double leakage = 0.0;
};

struct Condition {
  std::string detector;
  std::string outcome;

  bool operator==(const Condition&) const = default;
};

StateVector measure(const StateVector& s, const MeasureSpec& spec);

/// Measures only on components where `cond` holds; elsewhere the detector
/// receives its "not measured" record and the environment a fresh record.
StateVector conditional_measure(const StateVector& s, const Condition& cond, const MeasureSpec& spec);

struct Wiring {
  /// Subsystems whose joint record drives the display. Keys of `table` are
  /// their symbols joined by ','.
  std::vector<std::string> sources;
  std::map<std::string, std::string> table;

  bool operator==(const Wiring&) const = default;
};

StateVector apply_wiring(const StateVector& s, const Wiring& w, const std::string& display);

struct Branch {
  std::vector<std::string> label;
  double weight = 0.0;
  DensityOperator block;  ///< normalized diagonal block, over the source operator's space
};

struct BranchSet {
  std::vector<Branch> branches;
  std::string source;
};

std::string join_label(const std::vector<std::string>& label);

/// Largest |rho(a,b)| over pairs whose pointer readings differ.
double pointer_coherence(const DensityOperator& rho, std::span<const std::string> pointers);

BranchSet branch_decompose(const DensityOperator& rho, std::span<const std::string> pointers,
                           double eps = decoherence_eps());

/// An orthogonal component of a pure state singled out by a joint record over
/// `record_labels` (typically the environment factors).
struct Component {
  std::vector<std::size_t> record;
  double weight = 0.0;
};

std::vector<Component> components(const StateVector& s, std::span<const std::string> record_labels,
                                  double eps = decoherence_eps());

/// The symbol `subsystem` definitely shows on the component; nullopt if the
/// component is spread over several of its basis states.
std::optional<std::string> definite_symbol(const StateVector& s, std::span<const std::string> record_labels,
                                           const Component& c, const std::string& subsystem,
                                           double eps = decoherence_eps());

}  // namespace branchlab
