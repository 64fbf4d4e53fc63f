// End-to-end checks of the headline numbers. One PASS/FAIL line per
// criterion; the exit status is nonzero if any line fails.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "branchlab/cosmo.hpp"
#include "branchlab/epistemics.hpp"
#include "branchlab/error.hpp"
#include "branchlab/proof.hpp"
#include "branchlab/scenario.hpp"
#include "branchlab/verify.hpp"

using namespace branchlab;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
  double deviation = -1.0;  ///< set by numeric comparisons
};

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

Outcome within(double got, double want, double tol) {
  const double dev = std::abs(got - want);
  return {dev <= tol, "", dev};
}

// Worst deviation over the parts against the tightest tolerance named by the caller.
Outcome all_of(const std::vector<Outcome>& parts, double tol) {
  Outcome o{true, "", 0.0};
  for (const auto& p : parts) {
    o.pass = o.pass && p.pass;
    o.deviation = std::max(o.deviation, p.deviation);
  }
  o.detail = std::to_string(parts.size()) + " values, max deviation " + num(o.deviation) + " (tol " + num(tol) + ")";
  return o;
}

Outcome proof_outcome(const ProofCase& c, const std::map<std::string, double>& want) {
  const auto r = replay_proof(c);
  if (!r.conclusion) return {false, "no conclusion"};
  double dev = 0.0;
  for (const auto& [k, v] : want) dev = std::max(dev, std::abs((*r.conclusion)[k] - v));
  for (const auto& p : r.premises)
    if (!p.pass) return {false, "premise " + p.step + " failed"};
  return {dev <= 1e-10, std::to_string(r.premises.size()) + " premises, deviation " + num(dev) + " (tol " + num(1e-10) + ")"};
}

Outcome trials(std::uint64_t n, const std::function<TrialResult(std::uint64_t, std::uint64_t)>& f, double tol) {
  std::uint64_t passed = 0;
  double worst = 0.0;
  for (std::uint64_t k = 0; k < n; ++k) {
    const auto t = f(kSeed, k);
    passed += t.pass;
    worst = std::max(worst, t.max_deviation);
  }
  return {passed == n, std::to_string(passed) + "/" + std::to_string(n) + " trials, max deviation " + num(worst) + " (tol " + num(tol) + ")"};
}

// Per-trial tolerances live in the trial functions; `tols` only labels them.
Outcome suite(Suite s, std::uint64_t n, const std::string& tols) {
  const auto r = run_suite(s, n, kSeed);
  std::uint64_t passed = 0;
  for (const auto& t : r.trials) passed += t.pass;
  return {r.pass(), std::to_string(passed) + "/" + std::to_string(n) + " trials (" + tols + ")"};
}

double query(const Scenario& sc, int t, const std::string& observer, const Predicate& h, Rule rule) {
  return solve(sc, Query{t, observer, h, rule, std::nullopt}).probability;
}

Outcome branch_counting() {
  const auto sc = builtin("once_or_twice");
  const auto down = Predicate::record("D", "down");
  return all_of({within(query(sc, 2, "Alice", down, Rule::Indifference), 0.5, 1e-12),
                 within(query(sc, 3, "Alice", down, Rule::Indifference), 1.0 / 3.0, 1e-12),
                 within(query(sc, 2, "Alice", down, Rule::Born), 0.5, 1e-12),
                 within(query(sc, 3, "Alice", down, Rule::Born), 0.5, 1e-12)},
                1e-12);
}

Outcome sleeping_beauty() {
  const auto two = builtin("two_branch_beauty");
  const auto up = query(two, 2, "Beauty", Predicate::record("D", "up"), Rule::StrongESP);
  const auto three = builtin("three_branch_beauty");
  const auto r = solve(three, Query{3, "Beauty", Predicate::always(), Rule::StrongESP, std::nullopt});
  std::vector<double> ps;
  for (const auto& [k, v] : r.table.entries()) ps.push_back(v);
  std::sort(ps.begin(), ps.end());
  if (ps.size() != 3) return {false, "three_branch_beauty has " + std::to_string(ps.size()) + " copies"};
  return all_of({within(up, 2.0 / 3.0, 1e-12), within(ps[0], 0.25, 1e-12), within(ps[1], 0.25, 1e-12),
                 within(ps[2], 0.5, 1e-12)},
                1e-12);
}

Outcome dr_evil() {
  const auto sc = builtin("dr_evil");
  std::vector<Outcome> parts;
  for (const Rule rule : {Rule::StrongESP, Rule::Indifference}) {
    const auto r = solve(sc, Query{2, "DrEvil", Predicate::always(), rule, std::nullopt});
    if (r.table.size() != 2) return {false, "expected two copies"};
    for (const auto& [k, v] : r.table.entries()) parts.push_back(within(v, 0.5, 1e-12));
  }
  return all_of(parts, 1e-12);
}

Outcome dutch_books() {
  const auto a = builtin("appendix_a_book");
  const auto ind = dutch_book_check(a, Rule::Indifference, a.bets);
  bool ok = ind.sure_loss && ind.decisions.size() == 2 && ind.decisions[0].accepted && ind.decisions[1].accepted &&
            ind.settlements.size() == 3;
  for (const auto& s : ind.settlements) ok = ok && std::abs(s.net + 5.0) < 1e-9;
  const auto born = dutch_book_check(a, Rule::Born, a.bets);
  const bool born_ok = !born.sure_loss && born.decisions.size() == 2 && !born.decisions[1].accepted;

  const auto e = builtin("dr_evil_book");
  const auto evil = dutch_book_check(e, Rule::Indifference, e.bets);
  bool evil_ok = evil.sure_loss && evil.settlements.size() == 2;
  for (const auto& s : evil.settlements) evil_ok = evil_ok && std::abs(s.net + 100.0) < 1e-9;

  std::string d = std::string("indifference ") + (ok ? "sure loss -5 x3" : "wrong") + ", born " +
                  (born_ok ? "bet 2 rejected" : "wrong") + ", dr evil " + (evil_ok ? "sure loss -100 x2" : "wrong");
  return {ok && born_ok && evil_ok, d};
}

Outcome betting_ev() {
  const Bet b{0, 20.0, {{Predicate::label("down"), 50.0}, {Predicate::label("up"), 0.0}}, ""};
  const CredenceTable half({{"down", 0.5}, {"up", 0.5}});
  return all_of({within(expected_value(b, half), 5.0, 1e-12)}, 1e-12);
}

Outcome confirmation() {
  const auto c = confirm(builtin("what_wave_function"));
  if (c.trajectory.empty()) return {false, "no observations"};
  return all_of({within(c.priors.at("P_up"), 0.5, 1e-12), within(c.trajectory.back().at("P_up"), 0.9, 1e-12)},
                1e-12);
}

Outcome cosmological() {
  BranchHistory h;
  h.name = "convergent";
  h.gamma = 1.0;
  h.omega = 1.0;
  const auto closed = branch_measure(h);
  const auto quad = quadrature_measure(h);
  BranchHistory run = h;
  run.gamma = 0.4;
  const auto div = branch_measure(run);
  Outcome o = all_of(
      {within(closed.value, 1.0 / (2.0 * h.gamma - h.omega), 1e-12), within(quad.value, closed.value, 1e-8)}, 1e-8);
  o.pass = o.pass && !closed.divergent && div.divergent;
  o.detail += div.divergent ? "; gamma 0.4 divergent" : "; gamma 0.4 not flagged";
  return o;
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"born half/half", [] { return proof_outcome(ProofCase::half_half(), {{"up", 0.5}, {"down", 0.5}}); }},
      {"born one third/two thirds",
       [] { return proof_outcome(ProofCase::one_third_two_thirds(), {{"up", 2.0 / 3.0}, {"down", 1.0 / 3.0}}); }},
      {"equal-amplitude counting", [] { return suite(Suite::AppendixC, 200, "tol 1e-9 born, 1e-12 rho_AD"); }},
      {"environment invariance", [] { return trials(200, esp_environment_trial, 1e-10); }},
      {"reduced dynamics", [] { return trials(100, reduced_dynamics_trial, 1e-12); }},
      {"branch counting contrast", branch_counting},
      {"sleeping beauty", sleeping_beauty},
      {"dr evil duplication", dr_evil},
      {"dutch books", dutch_books},
      {"betting expected value", betting_ev},
      {"confirmation", confirmation},
      {"cosmological measure", cosmological},
      {"strong esp properties", [] { return suite(Suite::StrongEsp, 100, "tol 1e-12"); }},
  };

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%-4s %2zu  %-28s %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(), o.detail.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
