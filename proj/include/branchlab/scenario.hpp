#pragma once

// Declarative scenarios: a timeline of quantum events (prepare, measure,
// wire) and registry events (observe, erase, duplicate, wake, relocate) over
// a labeled state, plus the observers whose copies the credence rules range
// over.
//
// Ticks are integers. Tick 0 is the initial state; the state at tick t
// includes every event with time <= t. Branch labels are the detector records
// in measurement order, joined by ','.
//
// Observers come in two modes. A continuous observer has a copy on every
// branch at every tick. A sleeper has copies only where a WakeOn event fires.
// Each copy carries a memory (its evidence): Observe appends "D=sym",
// WakeOn appends "woke", EraseMemory truncates. Two copies are internally
// identical when they belong to the same observer, have the same memory, and
// (for observers that know the time) sit at the same tick.

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "branchlab/branching.hpp"
#include "branchlab/cosmo.hpp"
#include "branchlab/credence.hpp"
#include "branchlab/qstate.hpp"

namespace branchlab {

/// Hypothesis over a branch and (optionally) a copy. JSON forms:
///   true | {"label": "up"} | {"record": {"D": "up"}} | {"copy": "Dup"}
///   {"time": 3} | {"any": [...]} | {"all": [...]} | {"not": {...}}
struct Predicate {
  enum class Kind { Always, Label, Record, Copy, Time, Any, All, Not };

  Kind kind = Kind::Always;
  std::string text;                            ///< Label, Copy
  std::map<std::string, std::string> records;  ///< Record: every entry must match
  int time = 0;                                ///< Time
  std::vector<Predicate> children;             ///< Any, All, Not

  static Predicate always() { return {}; }
  static Predicate label(std::string l) { return {Kind::Label, std::move(l), {}, 0, {}}; }
  static Predicate record(std::string detector, std::string symbol) {
    return {Kind::Record, {}, {{std::move(detector), std::move(symbol)}}, 0, {}};
  }
  static Predicate copy(std::string id) { return {Kind::Copy, std::move(id), {}, 0, {}}; }
  static Predicate at(int t) { return {Kind::Time, {}, {}, t, {}}; }
  static Predicate any(std::vector<Predicate> c) { return {Kind::Any, {}, {}, 0, std::move(c)}; }
  static Predicate all(std::vector<Predicate> c) { return {Kind::All, {}, {}, 0, std::move(c)}; }
  static Predicate negate(Predicate p) { return {Kind::Not, {}, {}, 0, {std::move(p)}}; }

  bool operator==(const Predicate&) const = default;
};

/// What a predicate is evaluated against. Missing pieces make predicates
/// that need them undecidable.
struct EvalContext {
  std::optional<std::string> label;
  const std::map<std::string, std::string>* records = nullptr;
  std::optional<std::string> copy_id;
  std::optional<std::string> lineage;
  std::optional<int> tick;
};

/// Throws UndecidableHypothesis when the context lacks what `p` refers to.
bool evaluate(const Predicate& p, const EvalContext& ctx);

struct InitialFactor {
  std::string subsystem;
  std::vector<cplx> amplitudes;

  bool operator==(const InitialFactor&) const = default;
};

enum class EventKind { Prepare, Measure, ConditionalMeasure, Wire, Observe, EraseMemory, Duplicate, WakeOn, Relocate };

std::string_view to_string(EventKind k) noexcept;

struct Event {
  int time = 0;
  EventKind kind = EventKind::Measure;

  // Prepare: system, amplitudes. Measure: system, detector, env, basis
  // (columns; empty means computational), leakage. ConditionalMeasure adds
  // condition.
  std::string system;
  std::string detector;
  std::string env;
  std::vector<cplx> amplitudes;
  std::vector<std::vector<cplx>> basis;
  double leakage = 0.0;
  std::optional<Condition> condition;

  // Wire.
  Wiring wiring;
  std::string display;

  // Observe (observer, detector), EraseMemory (observer, when, keep),
  // Duplicate (observer, copy, when), WakeOn (observer, label, when),
  // Relocate (copy, shift).
  std::string observer;
  std::optional<Predicate> when;
  std::size_t keep = 0;
  std::string copy;
  std::string label;
  std::vector<double> shift;

  bool operator==(const Event&) const = default;
};

struct ObserverSpec {
  enum class Mode { Continuous, Sleeper };

  std::string id;
  std::string subsystem;
  Mode mode = Mode::Continuous;
  bool knows_time = true;

  bool operator==(const ObserverSpec&) const = default;
};

enum class Rule { Born, Indifference, StrongESP };

std::string_view to_string(Rule r) noexcept;
/// "born", "indifference", "strong-esp"; InvalidArgument otherwise.
Rule parse_rule(std::string_view s);

struct Query {
  int time = 0;
  std::string observer;
  Predicate hypothesis;
  Rule rule = Rule::Born;
  /// Picks one evidence class when the observer's copies at `time` disagree.
  std::optional<std::vector<std::string>> evidence;

  bool operator==(const Query&) const = default;
};

struct Payoff {
  Predicate when;
  double amount = 0.0;

  bool operator==(const Payoff&) const = default;
};

struct Bet {
  int offered_at = 0;
  double cost = 0.0;
  std::vector<Payoff> payoffs;
  std::string observer;  ///< empty: the scenario's first observer

  bool operator==(const Bet&) const = default;
};

struct Theory {
  std::string name;
  double prior = 0.0;
  std::vector<InitialFactor> initial;  ///< overrides the scenario's initial factors

  bool operator==(const Theory&) const = default;
};

struct Confirmation {
  std::string detector;
  int at = 0;
  std::vector<std::string> observed;
  std::vector<Theory> theories;

  bool operator==(const Confirmation&) const = default;
};

struct Scenario {
  std::string name;
  std::vector<Subsystem> subsystems;
  std::vector<InitialFactor> initial;
  std::vector<Event> events;
  std::vector<ObserverSpec> observers;
  std::vector<Bet> bets;
  std::vector<Query> queries;
  std::optional<std::vector<BranchHistory>> cosmo;
  std::optional<Confirmation> confirmation;

  int last_tick() const { return events.empty() ? 0 : events.back().time; }

  bool operator==(const Scenario&) const = default;
};

/// Parses and validates. Schema violations raise ParseError with a path such
/// as "events[2].detector"; dangling references raise LinkError naming the
/// field.
Scenario parse_scenario(std::string_view text);
std::string serialize_scenario(const Scenario& sc);

std::string predicate_json(const Predicate& p);
Predicate parse_predicate(std::string_view text);

/// A book document {"bets": [...]} validated against `sc`, or a whole
/// scenario document whose bets are taken as the book.
std::vector<Bet> parse_book(std::string_view text, const Scenario& sc);

/// Branch families from {"cosmo": [...]} or from a scenario's cosmo section.
std::vector<BranchHistory> parse_cosmo(std::string_view text);
std::string serialize_cosmo(std::span<const BranchHistory> hs);

/// Names of the bundled scenarios.
std::vector<std::string> builtin_names();
Scenario builtin(std::string_view name);
/// "builtin:<name>" or a file path.
Scenario load_scenario(const std::string& ref);

struct BranchInfo {
  std::string label;
  std::map<std::string, std::string> records;
  double weight = 0.0;
};

struct CopyInfo {
  ObserverCopy copy;  ///< id, branch label, tick, weight at that tick
  std::string observer;
  std::string lineage;
  std::vector<std::string> memory;
  std::map<std::string, std::string> records;
};

struct LogEntry {
  int time = 0;
  std::string kind;
  std::string detail;
};

struct WorldState {
  int tick = 0;
  StateVector state;
  std::vector<std::string> pointers;               ///< detectors in measurement order
  std::vector<std::vector<BranchInfo>> branches;  ///< per tick 0..tick
  std::vector<CopyInfo> copies;                   ///< every copy created up to tick
  std::vector<LogEntry> log;
  /// Branch label -> (observer, lineage) pairs alive at the last tick.
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> alive;

  const std::vector<BranchInfo>& branches_at(int t) const;
};

/// Executes events up to and including `until` (at most last_tick() + 1).
/// Event precondition failures raise EventError; NotDecohered passes through.
WorldState run(const Scenario& sc, int until);
/// Same, with `initial` factors replacing the scenario's for those subsystems.
WorldState run_with_initial(const Scenario& sc, const std::vector<InitialFactor>& initial, int until);

struct CopyClass {
  std::string observer;
  std::vector<std::string> evidence;
  std::vector<CopyInfo> members;
};

/// Copies, at any tick, internally identical to the observer's copies at
/// `time`. AmbiguousEvidence if those copies disagree and no `evidence` is given.
CopyClass enumerate_copies(const WorldState& ws, const Scenario& sc, const std::string& observer, int time,
                           const std::optional<std::vector<std::string>>& evidence = std::nullopt);

struct QueryResult {
  Query query;
  CredenceTable table;  ///< per branch label (Born) or per copy key
  double probability = 0.0;

  bool operator==(const QueryResult&) const = default;
};

/// Runs the whole scenario and answers the query. Born ranges over branches
/// at the query tick; Indifference and StrongESP over the copy class.
QueryResult solve(const Scenario& sc, const Query& q);
QueryResult solve(const Scenario& sc, const WorldState& full, const Query& q);

}  // namespace branchlab
