#include "branchlab/epistemics.hpp"

#include <algorithm>
#include <cmath>

#include "branchlab/error.hpp"

namespace branchlab {

namespace {

constexpr double kAcceptTol = 1e-9;
constexpr double kRowTol = 1e-9;

std::string describe(const Cell& c) {
  std::string s = "branch '" + c.label + "'";
  if (c.copy_id) s += ", copy '" + *c.copy_id + "'";
  return s;
}

}  // namespace

double payoff_in(const Bet& b, const Cell& cell) {
  const auto ctx = cell.context();
  std::optional<double> amount;
  for (const auto& p : b.payoffs) {
    if (!evaluate(p.when, ctx)) continue;
    if (amount) throw Error(ErrorCode::PartitionMismatch, "several payoffs match " + describe(cell));
    amount = p.amount;
  }
  if (!amount) throw Error(ErrorCode::PartitionMismatch, "no payoff covers " + describe(cell));
  return *amount;
}

double expected_value(const Bet& b, std::span<const Cell> cells) {
  double ev = -b.cost;
  for (const auto& c : cells)
    if (c.probability > 0.0) ev += c.probability * payoff_in(b, c);
  return ev;
}

double expected_value(const Bet& b, const CredenceTable& c) {
  // Keys are labels only, so record and copy predicates are undecidable here.
  double ev = -b.cost;
  for (const auto& [label, p] : c.entries()) {
    if (p <= 0.0) continue;
    const EvalContext ctx{label, nullptr, std::nullopt, std::nullopt, std::nullopt};
    std::optional<double> amount;
    for (const auto& pay : b.payoffs) {
      if (!evaluate(pay.when, ctx)) continue;
      if (amount) throw Error(ErrorCode::PartitionMismatch, "several payoffs match branch '" + label + "'");
      amount = pay.amount;
    }
    if (!amount) throw Error(ErrorCode::PartitionMismatch, "no payoff covers branch '" + label + "'");
    ev += p * *amount;
  }
  return ev;
}

std::vector<Cell> credence_cells(const Scenario& sc, const WorldState& full, Rule rule, const std::string& observer,
                                 int time) {
  std::vector<Cell> out;
  if (rule == Rule::Born) {
    for (const auto& b : full.branches_at(time)) out.push_back({b.weight, b.label, b.records, {}, {}, time});
    return out;
  }
  const auto cls = enumerate_copies(full, sc, observer, time);
  std::vector<ObserverCopy> copies;
  for (const auto& m : cls.members) copies.push_back(m.copy);
  const auto table = rule == Rule::StrongESP ? strong_esp(copies) : indifference_over_copies(copies);
  for (const auto& m : cls.members)
    out.push_back({table[m.copy.key()], m.copy.branch, m.records, m.copy.id, m.lineage, m.copy.time});
  return out;
}

BookReport dutch_book_check(const Scenario& sc, Rule rule, std::span<const Bet> book) {
  BookReport r;
  r.scenario = sc.name;
  r.rule = rule;
  int final_tick = sc.last_tick();
  for (const auto& b : book) {
    if (b.offered_at < 0 || b.offered_at > sc.last_tick() + 1)
      throw Error(ErrorCode::InvalidArgument, "bet offered at t=" + std::to_string(b.offered_at) + " outside the scenario");
    final_tick = std::max(final_tick, b.offered_at);
  }
  const auto full = run(sc, final_tick);

  auto observer_of = [&](const Bet& b) {
    if (!b.observer.empty()) return b.observer;
    if (sc.observers.empty()) throw Error(ErrorCode::InvalidArgument, "scenario '" + sc.name + "' has no observer");
    return sc.observers.front().id;
  };

  for (std::size_t i = 0; i < book.size(); ++i) {
    const auto& b = book[i];
    BetDecision d{i, b.offered_at, std::nullopt, false, {}};
    try {
      const auto cells = credence_cells(sc, full, rule, observer_of(b), b.offered_at);
      d.expected_value = expected_value(b, cells);
      d.accepted = *d.expected_value >= -kAcceptTol;
    } catch (const Error& e) {
      // A rule that cannot see the hypothesis cannot price the bet.
      if (e.code() != ErrorCode::UndecidableHypothesis) throw;
      d.note = e.what();
    }
    r.decisions.push_back(std::move(d));
  }

  for (const auto& br : full.branches_at(final_tick)) {
    const auto it = full.alive.find(br.label);
    if (it == full.alive.end()) continue;
    for (const auto& [obs, lineage] : it->second) {
      bool relevant = false;
      Settlement s{br.label, lineage, br.weight, 0.0};
      const Cell cell{br.weight, br.label, br.records, lineage, lineage, final_tick};
      for (std::size_t i = 0; i < book.size(); ++i) {
        if (observer_of(book[i]) != obs) continue;
        relevant = true;
        if (r.decisions[i].accepted) s.net += payoff_in(book[i], cell) - book[i].cost;
      }
      if (relevant) r.settlements.push_back(std::move(s));
    }
  }
  r.sure_loss = !r.settlements.empty() &&
                std::all_of(r.settlements.begin(), r.settlements.end(), [](const Settlement& s) { return s.net < 0.0; });
  return r;
}

Distribution bayes_update(const Distribution& priors, const std::map<std::string, Distribution>& likelihoods,
                          const std::string& observed) {
  double total = 0.0;
  for (const auto& [t, p] : priors) {
    if (p < 0.0) throw Error(ErrorCode::InvalidArgument, "negative prior for '" + t + "'");
    total += p;
  }
  if (std::abs(total - 1.0) > kRowTol) throw Error(ErrorCode::InvalidArgument, "priors sum to " + std::to_string(total));

  Distribution post;
  double evidence = 0.0;
  for (const auto& [t, p] : priors) {
    const auto row = likelihoods.find(t);
    if (row == likelihoods.end()) throw Error(ErrorCode::InvalidArgument, "no likelihoods for theory '" + t + "'");
    double sum = 0.0;
    for (const auto& [o, l] : row->second) {
      if (l < 0.0) throw Error(ErrorCode::InvalidArgument, "negative likelihood in theory '" + t + "'");
      sum += l;
    }
    if (std::abs(sum - 1.0) > kRowTol)
      throw Error(ErrorCode::InvalidArgument, "likelihoods of theory '" + t + "' sum to " + std::to_string(sum));
    const auto l = row->second.find(observed);
    post[t] = p * (l == row->second.end() ? 0.0 : l->second);
    evidence += post[t];
  }
  if (!(evidence > 0.0)) throw Error(ErrorCode::ZeroEvidence, "no theory allows outcome '" + observed + "'");
  for (auto& [t, p] : post) p /= evidence;
  return post;
}

std::vector<Distribution> confirm_sequence(const Distribution& priors,
                                           const std::map<std::string, Distribution>& likelihoods,
                                           std::span<const std::string> outcomes) {
  std::vector<Distribution> out;
  Distribution cur = priors;
  for (const auto& o : outcomes) {
    cur = bayes_update(cur, likelihoods, o);
    out.push_back(cur);
  }
  return out;
}

ConfirmationReport confirm(const Scenario& sc) {
  if (!sc.confirmation) throw Error(ErrorCode::InvalidArgument, "scenario '" + sc.name + "' has no confirmation section");
  const auto& c = *sc.confirmation;
  ConfirmationReport r;
  r.observed = c.observed;
  for (const auto& th : c.theories) {
    r.priors[th.name] = th.prior;
    const auto ws = run_with_initial(sc, th.initial, c.at);
    Distribution row;
    for (const auto& b : ws.branches_at(c.at)) {
      const auto it = b.records.find(c.detector);
      if (it == b.records.end())
        throw Error(ErrorCode::NoRecord, "detector '" + c.detector + "' holds no record at t=" + std::to_string(c.at));
      row[it->second] += b.weight;
    }
    r.likelihoods[th.name] = std::move(row);
  }
  r.trajectory = confirm_sequence(r.priors, r.likelihoods, r.observed);
  return r;
}

}  // namespace branchlab
