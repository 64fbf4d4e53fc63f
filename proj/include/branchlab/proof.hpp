#pragma once

// Mechanical replay of the display-wiring arguments for the Born rule.
//
// Witness states are built by real unitary evolution (measure, refine, wire).
// Every ESP premise is a numerical comparison of two reduced operators; when
// it holds, the events "display shows x" in the two states are declared
// equiprobable. Events are sets of orthogonal components, so two events that
// pick out the same components of one state are the same event. The
// conclusion follows once every single component of the target state lands
// in one equivalence class.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "branchlab/credence.hpp"
#include "branchlab/qstate.hpp"

namespace branchlab {

struct Premise {
  std::string step;
  std::string description;
  std::string left;
  std::string right;
  double max_deviation = 0.0;
  bool pass = false;

  bool operator==(const Premise&) const = default;
};

struct ProofReport {
  std::string case_id;
  std::vector<Premise> premises;
  std::optional<CredenceTable> conclusion;  ///< present only if every premise passed

  bool operator==(const ProofReport&) const = default;
};

enum class ProofKind { HalfHalf, OneThirdTwoThirds, General };

struct ProofCase {
  ProofKind kind = ProofKind::HalfHalf;
  /// General only: outcome weights and per-branch phases (radians).
  std::vector<double> weights;
  std::vector<double> phases;
  std::uint64_t max_denominator = 100;

  static ProofCase half_half() { return {ProofKind::HalfHalf, {}, {}, 100}; }
  static ProofCase one_third_two_thirds() { return {ProofKind::OneThirdTwoThirds, {}, {}, 100}; }
  static ProofCase general(std::vector<double> w, std::vector<double> phases, std::uint64_t max_den = 100) {
    return {ProofKind::General, std::move(w), std::move(phases), max_den};
  }

  std::string id() const;
};

/// Tolerance on every reduced-operator premise.
inline constexpr double kPremiseTol = 1e-10;

/// Label chasing over component events of registered witness states.
class Derivation {
 public:
  /// Registers `view` as a materialization of logical state `logical`. Views
  /// of one logical state must share their component records; they differ
  /// only in which auxiliary displays are present.
  void add_state(const std::string& view, const std::string& logical, StateVector s,
                 std::vector<std::string> record_labels);

  /// ESP: compares rho_{observer,display} across two views and, if equal,
  /// identifies the events "display shows x" for every symbol x.
  Premise esp(const std::string& step, const std::string& view_a, const std::string& view_b,
              const std::string& observer, const std::string& display);

  /// ESP transfer to a state without displays: compares rho_{observer,pointer}
  /// and identifies the pointer events.
  Premise transfer(const std::string& step, const std::string& view_a, const std::string& view_b,
                   const std::string& observer, const std::string& pointer) {
    return esp(step, view_a, view_b, observer, pointer);
  }

  /// "The x-branches just are the y-branches": checks both events pick out
  /// the same components of `view`.
  Premise coincide(const std::string& step, const std::string& view, const std::string& display_x,
                   const std::string& x, const std::string& display_y, const std::string& y);

  /// True when every single component of `logical` is in one class.
  bool equiprobable(const std::string& logical) const;

  /// Component probabilities 1/N aggregated per symbol of `pointer` on `view`.
  CredenceTable outcome_table(const std::string& view, const std::string& pointer) const;

  std::size_t component_count(const std::string& view) const;

 private:
  struct Witness {
    std::string logical;
    StateVector state;
    std::vector<std::string> records;
    std::vector<Component> comps;
  };
  using Event = std::pair<std::string, std::set<std::size_t>>;

  const Witness& get(const std::string& view) const;
  std::set<std::size_t> event(const Witness& w, const std::string& display, const std::string& sym) const;
  Event find(const Event& e) const;
  void unite(const Event& a, const Event& b);

  std::map<std::string, Witness> views_;
  mutable std::map<Event, Event> parent_;
};

/// Builds the witness states for the case, checks every premise, and derives
/// the outcome credences. Throws PremiseFailed naming the step on the first
/// premise whose deviation reaches kPremiseTol.
ProofReport replay_proof(const ProofCase& c);

}  // namespace branchlab
