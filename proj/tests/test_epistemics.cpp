#include <cmath>

#include "doctest.h"

#include "branchlab/epistemics.hpp"
#include "branchlab/error.hpp"
#include "branchlab/random.hpp"

using namespace branchlab;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an Error");
  return ErrorCode::InvalidArgument;
}

Bet label_bet(double cost, std::map<std::string, double> pays) {
  Bet b;
  b.cost = cost;
  for (auto& [l, a] : pays) b.payoffs.push_back({Predicate::label(l), a});
  return b;
}

// Oracle: sum over labels of p * payoff, minus cost.
double direct_ev(const std::map<std::string, double>& p, const std::map<std::string, double>& pay, double cost) {
  double s = -cost;
  for (const auto& [k, v] : p) s += v * pay.at(k);
  return s;
}

}  // namespace

TEST_CASE("a bet worth taking at even odds") {
  const CredenceTable half({{"up", 0.5}, {"down", 0.5}});
  CHECK(expected_value(label_bet(20.0, {{"down", 50.0}, {"up", 0.0}}), half) == 5.0);
  CHECK(expected_value(label_bet(20.0, {{"down", 0.0}, {"up", 0.0}}), half) == -20.0);
  CHECK(expected_value(label_bet(0.0, {{"up", 10.0}, {"down", -20.0}}), half) == -5.0);
}

TEST_CASE("expected value matches the direct sum and is linear") {
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto rng = trial_rng(61, t);
    std::uniform_real_distribution<double> u(0.0, 1.0), amt(-50.0, 50.0);
    const double p = u(rng);
    const std::map<std::string, double> probs{{"up", p}, {"down", 1.0 - p}};
    const std::map<std::string, double> pa{{"up", amt(rng)}, {"down", amt(rng)}};
    const std::map<std::string, double> pb{{"up", amt(rng)}, {"down", amt(rng)}};
    const double ca = amt(rng), cb = amt(rng);
    const CredenceTable table(probs);
    const double ea = expected_value(label_bet(ca, pa), table);
    const double eb = expected_value(label_bet(cb, pb), table);
    CHECK(std::abs(ea - direct_ev(probs, pa, ca)) < 1e-12);
    std::map<std::string, double> sum;
    for (const auto& [k, v] : pa) sum[k] = v + pb.at(k);
    CHECK(std::abs(expected_value(label_bet(ca + cb, sum), table) - (ea + eb)) < 1e-9);
  }
}

TEST_CASE("payoffs must partition the cells") {
  const Cell up{1.0, "up", {}, std::nullopt, std::nullopt, std::nullopt};
  Bet overlap;
  overlap.payoffs = {{Predicate::always(), 1.0}, {Predicate::label("up"), 2.0}};
  CHECK(code_of([&] { (void)payoff_in(overlap, up); }) == ErrorCode::PartitionMismatch);
  const Bet gap = label_bet(0.0, {{"down", 1.0}});
  CHECK(code_of([&] { (void)payoff_in(gap, up); }) == ErrorCode::PartitionMismatch);
  // Cells with zero probability are not priced.
  const std::vector<Cell> cells{up, {0.0, "down", {}, std::nullopt, std::nullopt, std::nullopt}};
  CHECK(expected_value(label_bet(1.0, {{"up", 3.0}}), cells) == 2.0);
}

TEST_CASE("the quantum book under branch counting loses on every branch") {
  const auto sc = builtin("appendix_a_book");
  const auto r = dutch_book_check(sc, Rule::Indifference, sc.bets);
  REQUIRE(r.decisions.size() == 2);
  CHECK(r.decisions[0].accepted);
  CHECK(r.decisions[1].accepted);
  REQUIRE(r.decisions[0].expected_value);
  REQUIRE(r.settlements.size() == 3);
  for (const auto& s : r.settlements) CHECK(std::abs(s.net + 5.0) < 1e-9);
  CHECK(r.sure_loss);
}

TEST_CASE("the quantum book under Born rejects the second bet") {
  const auto sc = builtin("appendix_a_book");
  const auto r = dutch_book_check(sc, Rule::Born, sc.bets);
  REQUIRE(r.decisions.size() == 2);
  CHECK_FALSE(r.decisions[1].accepted);
  REQUIRE(r.decisions[1].expected_value);
  CHECK(*r.decisions[1].expected_value < 0.0);
  CHECK_FALSE(r.sure_loss);
}

TEST_CASE("the duplication book") {
  const auto sc = builtin("dr_evil_book");
  const auto ind = dutch_book_check(sc, Rule::Indifference, sc.bets);
  REQUIRE(ind.settlements.size() == 2);
  for (const auto& s : ind.settlements) CHECK(std::abs(s.net + 100.0) < 1e-9);
  CHECK(ind.sure_loss);

  const auto born = dutch_book_check(sc, Rule::Born, sc.bets);
  for (const auto& d : born.decisions) {
    CHECK_FALSE(d.accepted);
    CHECK_FALSE(d.expected_value);
    CHECK_FALSE(d.note.empty());
  }
  CHECK_FALSE(born.sure_loss);
}

TEST_CASE("Born credences never yield a sure loss on the bundled books") {
  for (const auto* name : {"appendix_a_book", "dr_evil_book"}) {
    const auto sc = builtin(name);
    CHECK_FALSE(dutch_book_check(sc, Rule::Born, sc.bets).sure_loss);
  }
}

TEST_CASE("an empty book settles nothing") {
  const auto sc = builtin("once_or_twice");
  const auto r = dutch_book_check(sc, Rule::Indifference, {});
  CHECK(r.decisions.empty());
  CHECK_FALSE(r.sure_loss);
}

TEST_CASE("credence cells") {
  const auto sc = builtin("once_or_twice");
  const auto ws = run(sc, sc.last_tick());
  const auto born = credence_cells(sc, ws, Rule::Born, "Alice", 3);
  CHECK(born.size() == 3);
  double total = 0.0;
  for (const auto& c : born) total += c.probability;
  CHECK(std::abs(total - 1.0) < 1e-12);
  const auto ind = credence_cells(sc, ws, Rule::Indifference, "Alice", 3);
  CHECK(ind.size() == 3);
  for (const auto& c : ind) CHECK(std::abs(c.probability - 1.0 / 3.0) < 1e-12);
}

TEST_CASE("Bayesian updating") {
  const Distribution prior{{"A", 0.5}, {"B", 0.5}};
  const std::map<std::string, Distribution> lik{{"A", {{"up", 0.9}, {"down", 0.1}}},
                                                {"B", {{"up", 0.1}, {"down", 0.9}}}};
  const auto post = bayes_update(prior, lik, "up");
  CHECK(std::abs(post.at("A") - 0.9) < 1e-15);
  CHECK(std::abs(post.at("B") - 0.1) < 1e-15);

  const std::map<std::string, Distribution> same{{"A", {{"up", 0.3}, {"down", 0.7}}},
                                                 {"B", {{"up", 0.3}, {"down", 0.7}}}};
  const Distribution skew{{"A", 0.2}, {"B", 0.8}};
  const auto unchanged = bayes_update(skew, same, "down");
  CHECK(std::abs(unchanged.at("A") - 0.2) < 1e-15);

  const std::map<std::string, Distribution> never{{"A", {{"up", 0.0}, {"down", 1.0}}},
                                                  {"B", {{"up", 0.0}, {"down", 1.0}}}};
  CHECK(code_of([&] { (void)bayes_update(prior, never, "up"); }) == ErrorCode::ZeroEvidence);
  const Distribution bad{{"A", 0.7}, {"B", 0.7}};
  CHECK(code_of([&] { (void)bayes_update(bad, lik, "up"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("sequential updating") {
  const Distribution prior{{"A", 0.5}, {"B", 0.5}};
  const std::map<std::string, Distribution> lik{{"A", {{"up", 0.9}, {"down", 0.1}}},
                                                {"B", {{"up", 0.1}, {"down", 0.9}}}};
  const std::vector<std::string> seq{"up", "up", "down"};
  const auto traj = confirm_sequence(prior, lik, seq);
  REQUIRE(traj.size() == 3);
  CHECK(std::abs(traj[0].at("A") - 0.9) < 1e-12);
  CHECK(std::abs(traj[1].at("A") - 81.0 / 82.0) < 1e-12);
  CHECK(std::abs(traj[2].at("A") - 0.9) < 1e-12);

  // Ten ups: odds 9^10 : 1.
  const std::vector<std::string> ups(10, "up");
  const auto ten = confirm_sequence(prior, lik, ups);
  const double odds = std::pow(9.0, 10);
  CHECK(std::abs(ten.back().at("A") - odds / (odds + 1.0)) < 1e-12);
}

TEST_CASE("posteriors do not depend on a common likelihood scale") {
  for (std::uint64_t t = 0; t < 30; ++t) {
    auto rng = trial_rng(62, t);
    std::uniform_real_distribution<double> u(0.05, 0.95);
    const double pa = u(rng), la = u(rng), lb = u(rng);
    const Distribution prior{{"A", pa}, {"B", 1.0 - pa}};
    const std::map<std::string, Distribution> lik{{"A", {{"x", la}, {"y", 1.0 - la}}}, {"B", {{"x", lb}, {"y", 1.0 - lb}}}};
    const auto post = bayes_update(prior, lik, "x");
    const double want = pa * la / (pa * la + (1.0 - pa) * lb);
    CHECK(std::abs(post.at("A") - want) < 1e-12);
    CHECK(std::abs(post.at("A") + post.at("B") - 1.0) < 1e-12);
  }
}

TEST_CASE("confirmation from a scenario") {
  const auto c = confirm(builtin("what_wave_function"));
  CHECK(c.priors.at("P_up") == 0.5);
  CHECK(std::abs(c.likelihoods.at("P_up").at("up") - 0.9) < 1e-12);
  REQUIRE(c.trajectory.size() == 1);
  CHECK(std::abs(c.trajectory.back().at("P_up") - 0.9) < 1e-12);
  CHECK(code_of([] { (void)confirm(builtin("once")); }) == ErrorCode::InvalidArgument);
}
