#pragma once

// Bets, Dutch books and Bayesian confirmation over scenario credences.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "branchlab/credence.hpp"
#include "branchlab/scenario.hpp"

namespace branchlab {

/// One cell of the hypothesis partition with its credence. Predicates are
/// evaluated against whatever context fields are set.
struct Cell {
  double probability = 0.0;
  std::string label;
  std::map<std::string, std::string> records;
  std::optional<std::string> copy_id;
  std::optional<std::string> lineage;
  std::optional<int> tick;

  EvalContext context() const { return {label, &records, copy_id, lineage, tick}; }
};

/// Amount paid in `cell`. PartitionMismatch unless exactly one payoff matches.
double payoff_in(const Bet& b, const Cell& cell);

/// Sum of P(h) * payoff(h) minus cost. Cells with zero probability are skipped.
double expected_value(const Bet& b, std::span<const Cell> cells);
/// Table keys are read as branch labels.
double expected_value(const Bet& b, const CredenceTable& c);

/// Credence cells for `observer` at `time` under `rule`: one per branch for
/// Born, one per member of the copy class otherwise.
std::vector<Cell> credence_cells(const Scenario& sc, const WorldState& full, Rule rule, const std::string& observer,
                                 int time);

struct BetDecision {
  std::size_t index = 0;
  int offered_at = 0;
  std::optional<double> expected_value;  ///< absent when the rule cannot price the bet
  bool accepted = false;
  std::string note;

  bool operator==(const BetDecision&) const = default;
};

struct Settlement {
  std::string branch;
  std::string lineage;
  double weight = 0.0;
  double net = 0.0;

  bool operator==(const Settlement&) const = default;
};

struct BookReport {
  std::string scenario;
  Rule rule = Rule::Born;
  std::vector<BetDecision> decisions;
  std::vector<Settlement> settlements;  ///< one per (branch, lineage) at the final tick
  bool sure_loss = false;

  bool operator==(const BookReport&) const = default;
};

/// A bet is accepted when its expected value under the rule's credences at
/// the offering tick is >= 0 (up to 1e-9). Accepted bets settle on every
/// (branch, lineage) cell alive at the final tick.
BookReport dutch_book_check(const Scenario& sc, Rule rule, std::span<const Bet> book);

using Distribution = std::map<std::string, double>;

/// Conditionalization on one outcome. ZeroEvidence when no theory gives the
/// outcome positive probability.
Distribution bayes_update(const Distribution& priors, const std::map<std::string, Distribution>& likelihoods,
                          const std::string& observed);

/// Posteriors after each outcome in turn.
std::vector<Distribution> confirm_sequence(const Distribution& priors,
                                           const std::map<std::string, Distribution>& likelihoods,
                                           std::span<const std::string> outcomes);

struct ConfirmationReport {
  Distribution priors;
  std::map<std::string, Distribution> likelihoods;  ///< theory -> detector outcome -> Born weight
  std::vector<std::string> observed;
  std::vector<Distribution> trajectory;

  bool operator==(const ConfirmationReport&) const = default;
};

/// Runs the scenario once per theory and uses the Born weights of the
/// confirmation detector at its tick as that theory's likelihoods.
ConfirmationReport confirm(const Scenario& sc);

}  // namespace branchlab
