#include "branchlab/proof.hpp"

#include <cmath>
#include <sstream>

#include "branchlab/branching.hpp"
#include "branchlab/error.hpp"

namespace branchlab {

std::string ProofCase::id() const {
  switch (kind) {
    case ProofKind::HalfHalf:
      return "half-half";
    case ProofKind::OneThirdTwoThirds:
      return "one-third-two-thirds";
    case ProofKind::General: {
      std::ostringstream os;
      os << "general[";
      for (std::size_t k = 0; k < weights.size(); ++k) os << (k ? "," : "") << weights[k];
      os << "]";
      return os.str();
    }
  }
  return "unknown";
}

void Derivation::add_state(const std::string& view, const std::string& logical, StateVector s,
                           std::vector<std::string> record_labels) {
  if (views_.count(view)) throw Error(ErrorCode::LabelCollision, "witness '" + view + "' registered twice");
  auto comps = components(s, record_labels);
  for (const auto& [name, w] : views_) {
    if (w.logical != logical) continue;
    bool same = w.comps.size() == comps.size();
    for (std::size_t i = 0; same && i < comps.size(); ++i) same = w.comps[i].record == comps[i].record;
    if (!same)
      throw Error(ErrorCode::InvalidArgument, "views '" + name + "' and '" + view + "' of '" + logical +
                                                  "' disagree on their components");
  }
  views_[view] = Witness{logical, std::move(s), std::move(record_labels), std::move(comps)};
}

const Derivation::Witness& Derivation::get(const std::string& view) const {
  const auto it = views_.find(view);
  if (it == views_.end()) throw Error(ErrorCode::LabelMissing, "no witness named '" + view + "'");
  return it->second;
}

std::set<std::size_t> Derivation::event(const Witness& w, const std::string& display, const std::string& sym) const {
  std::set<std::size_t> out;
  for (std::size_t i = 0; i < w.comps.size(); ++i) {
    const auto s = definite_symbol(w.state, w.records, w.comps[i], display);
    if (s && *s == sym) out.insert(i);
  }
  return out;
}

Derivation::Event Derivation::find(const Event& e) const {
  Event cur = e;
  for (;;) {
    const auto it = parent_.find(cur);
    if (it == parent_.end() || it->second == cur) return cur;
    cur = it->second;
  }
}

void Derivation::unite(const Event& a, const Event& b) {
  const Event ra = find(a);
  const Event rb = find(b);
  if (ra != rb) parent_[ra] = rb;
}

Premise Derivation::esp(const std::string& step, const std::string& view_a, const std::string& view_b,
                        const std::string& observer, const std::string& display) {
  const Witness& a = get(view_a);
  const Witness& b = get(view_b);
  const std::vector<std::string> keep{observer, display};
  const auto ra = reduced_density(a.state, keep);
  const auto rb = reduced_density(b.state, keep);

  Premise p;
  p.step = step;
  p.description = "equal " + observer + "+" + display + " reduced operators";
  p.left = "rho_{" + observer + "," + display + "}(" + view_a + ")";
  p.right = "rho_{" + observer + "," + display + "}(" + view_b + ")";
  p.max_deviation = max_abs_diff(ra, rb);
  p.pass = p.max_deviation < kPremiseTol;
  if (!p.pass) return p;

  const auto& disp = a.state.space().at(display);
  for (std::size_t x = 0; x < disp.dim; ++x) {
    const auto sym = disp.symbol(x);
    auto ea = event(a, display, sym);
    auto eb = event(b, display, sym);
    if (ea.empty() && eb.empty()) continue;
    unite({a.logical, std::move(ea)}, {b.logical, std::move(eb)});
  }
  return p;
}

Premise Derivation::coincide(const std::string& step, const std::string& view, const std::string& display_x,
                             const std::string& x, const std::string& display_y, const std::string& y) {
  const Witness& w = get(view);
  const auto ex = event(w, display_x, x);
  const auto ey = event(w, display_y, y);
  Premise p;
  p.step = step;
  p.description = "the " + x + "-branches are the " + y + "-branches";
  p.left = x + "@" + display_x + "(" + view + ")";
  p.right = y + "@" + display_y + "(" + view + ")";
  p.max_deviation = (ex == ey && !ex.empty()) ? 0.0 : 1.0;
  p.pass = p.max_deviation < kPremiseTol;
  return p;
}

bool Derivation::equiprobable(const std::string& logical) const {
  const Witness* w = nullptr;
  for (const auto& [name, v] : views_)
    if (v.logical == logical) { w = &v; break; }
  if (!w) throw Error(ErrorCode::LabelMissing, "no witness of '" + logical + "'");
  if (w->comps.empty()) return false;
  const Event root = find({logical, {0}});
  for (std::size_t i = 1; i < w->comps.size(); ++i)
    if (find({logical, {i}}) != root) return false;
  return true;
}

std::size_t Derivation::component_count(const std::string& view) const { return get(view).comps.size(); }

CredenceTable Derivation::outcome_table(const std::string& view, const std::string& pointer) const {
  const Witness& w = get(view);
  if (!equiprobable(w.logical))
    throw Error(ErrorCode::PremiseFailed, "components of '" + w.logical + "' were not shown equiprobable");
  std::map<std::string, std::size_t> counts;
  for (const auto& c : w.comps) {
    const auto s = definite_symbol(w.state, w.records, c, pointer);
    if (!s) throw Error(ErrorCode::NotDecohered, "component has no definite '" + pointer + "' record");
    ++counts[*s];
  }
  std::map<std::string, double> t;
  for (const auto& [s, n] : counts) t[s] = static_cast<double>(n) / static_cast<double>(w.comps.size());
  return CredenceTable(std::move(t));
}

namespace {

void require(const Premise& p, ProofReport& r) {
  r.premises.push_back(p);
  if (!p.pass) {
    std::ostringstream msg;
    msg << "step " << p.step << " (" << p.description << "): " << p.left << " vs " << p.right << " deviates by "
        << p.max_deviation;
    throw Error(ErrorCode::PremiseFailed, msg.str());
  }
}

Premise closure(const std::string& step, const Derivation& d, const std::string& logical) {
  Premise p;
  p.step = step;
  p.description = "every component of " + logical + " is in one equiprobability class";
  p.left = logical;
  p.right = logical;
  p.max_deviation = d.equiprobable(logical) ? 0.0 : 1.0;
  p.pass = p.max_deviation < kPremiseTol;
  return p;
}

const Subsystem kAlice{"A", 1, {"R"}};
const Subsystem kSpin{"a", 2, {"up", "down"}};
const Subsystem kD1{"D1", 3, {"R", "up", "down"}};

StateVector spin_state(double up_weight) {
  return StateVector::of(kSpin, {cplx{std::sqrt(up_weight), 0.0}, cplx{std::sqrt(1.0 - up_weight), 0.0}});
}

StateVector ready(const Subsystem& s) { return StateVector::basis(Space({s}), 0); }

StateVector measured(const std::vector<Subsystem>& displays, double up_weight) {
  std::vector<StateVector> parts{ready(kAlice), ready(kD1)};
  for (const auto& d : displays) parts.push_back(ready(d));
  parts.push_back(spin_state(up_weight));
  parts.push_back(ready(Subsystem{"E", 4, {}}));
  return measure(tensor(parts), MeasureSpec{"a", "D1", "E", {}, 0.0});
}

// Wiring keyed by the joint (environment, ancilla) record of each component.
Wiring component_wiring(const StateVector& s, const std::vector<std::string>& records,
                        const std::vector<std::string>& symbols) {
  const auto comps = components(s, records);
  if (comps.size() != symbols.size())
    throw Error(ErrorCode::InvalidArgument, "wiring needs one symbol per component");
  Wiring w;
  w.sources = records;
  for (std::size_t i = 0; i < comps.size(); ++i) {
    std::string key;
    for (std::size_t k = 0; k < records.size(); ++k) {
      if (k) key += ',';
      key += s.space().at(records[k]).symbol(comps[i].record[k]);
    }
    w.table[key] = symbols[i];
  }
  return w;
}

ProofReport half_half() {
  ProofReport r{ProofCase::half_half().id(), {}, std::nullopt};
  const Subsystem d2{"D2", 3, {"R", "heart", "diamond"}};
  const auto psi = measured({d2}, 0.5);
  const auto psi1 = apply_wiring(psi, Wiring{{"D1"}, {{"up", "heart"}, {"down", "diamond"}}}, "D2");
  const auto psi2 = apply_wiring(psi, Wiring{{"D1"}, {{"up", "diamond"}, {"down", "heart"}}}, "D2");

  Derivation d;
  d.add_state("Psi1", "Psi1", psi1, {"E"});
  d.add_state("Psi2", "Psi2", psi2, {"E"});
  require(d.esp("1", "Psi1", "Psi2", "A", "D1"), r);
  require(d.esp("2", "Psi1", "Psi2", "A", "D2"), r);
  require(d.coincide("3", "Psi1", "D2", "heart", "D1", "up"), r);
  require(d.coincide("3", "Psi2", "D2", "heart", "D1", "down"), r);
  require(closure("4", d, "Psi1"), r);
  r.conclusion = d.outcome_table("Psi1", "D1");
  return r;
}

ProofReport one_third_two_thirds() {
  ProofReport r{ProofCase::one_third_two_thirds().id(), {}, std::nullopt};
  const Subsystem d2{"D2", 3, {"R", "heart", "diamond"}};
  const Subsystem d3{"D3", 3, {"R", "club", "spade"}};
  const auto psi = measured({d2, d3}, 2.0 / 3.0);

  const std::vector<double> w{2.0 / 3.0, 1.0 / 3.0};
  const auto eq = equal_amplitude_refine(psi, rationalize(w), "E", "anc");
  const std::vector<std::string> rec{"E", "anc"};
  // Components in record order: two up-components, then the down-component.
  auto wire = [&](const std::vector<std::string>& s2, const std::vector<std::string>& s3) {
    return apply_wiring(apply_wiring(eq, component_wiring(eq, rec, s2), "D2"), component_wiring(eq, rec, s3), "D3");
  };
  const auto alpha = wire({"diamond", "heart", "heart"}, {"club", "spade", "club"});
  const auto beta = wire({"heart", "heart", "diamond"}, {"club", "club", "spade"});

  Derivation d;
  d.add_state("Psi", "Psi", psi, {"E"});
  d.add_state("alpha", "alpha", alpha, rec);
  d.add_state("beta", "beta", beta, rec);
  require(d.esp("1", "alpha", "beta", "A", "D1"), r);
  require(d.esp("2", "alpha", "beta", "A", "D2"), r);
  require(d.coincide("2", "beta", "D2", "diamond", "D1", "down"), r);
  require(d.esp("3", "alpha", "beta", "A", "D3"), r);
  require(d.coincide("3", "beta", "D3", "spade", "D1", "down"), r);
  require(closure("4", d, "alpha"), r);
  require(d.transfer("transfer", "Psi", "alpha", "A", "D1"), r);
  r.conclusion = d.outcome_table("alpha", "D1");
  return r;
}

ProofReport general(const ProofCase& c) {
  ProofReport r{c.id(), {}, std::nullopt};
  const std::size_t n = c.weights.size();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "general case needs at least one weight");
  if (!c.phases.empty() && c.phases.size() != n)
    throw Error(ErrorCode::InvalidArgument, "one phase per weight required");

  std::vector<cplx> amps(n);
  std::vector<std::size_t> outcomes(n);
  for (std::size_t k = 0; k < n; ++k) {
    if (!(c.weights[k] > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must be positive");
    const double th = c.phases.empty() ? 0.0 : c.phases[k];
    amps[k] = std::polar(std::sqrt(c.weights[k]), th);
    outcomes[k] = k;
  }
  const auto psi = branch_state(amps, outcomes, n);
  const auto eq = equal_amplitude_refine(psi, rationalize(c.weights, c.max_denominator), "E", "anc");
  const std::vector<std::string> rec{"E", "anc"};
  const std::size_t m = components(eq, rec).size();

  // One binary display per component. The dense cap rules out materializing
  // all of them at once, so each display gets its own view of the logical
  // state; the displays are records on orthogonal components, so the
  // reduced operator of Alice plus one display is the same in either form.
  const Subsystem screen{"S", 3, {"R", "S", "S'"}};
  const auto with_screen = tensor(eq, ready(screen));
  auto screen_on = [&](std::size_t primed) {
    std::vector<std::string> syms(m, "S");
    syms[primed] = "S'";
    return apply_wiring(with_screen, component_wiring(with_screen, rec, syms), "S");
  };

  Derivation d;
  d.add_state("Psi", "Psi", psi, {"E"});
  d.add_state("beta", "beta", screen_on(m - 1), rec);
  for (std::size_t k = 0; k < m; ++k) {
    const std::string view = "alpha#" + std::to_string(k);
    d.add_state(view, "alpha", screen_on(k), rec);
    require(d.esp("display " + std::to_string(k), view, "beta", "A", "S"), r);
  }
  require(closure("combine", d, "alpha"), r);
  require(d.transfer("transfer", "Psi", "alpha#0", "A", "D"), r);
  r.conclusion = d.outcome_table("alpha#0", "D");
  return r;
}

}  // namespace

ProofReport replay_proof(const ProofCase& c) {
  switch (c.kind) {
    case ProofKind::HalfHalf:
      return half_half();
    case ProofKind::OneThirdTwoThirds:
      return one_third_two_thirds();
    case ProofKind::General:
      return general(c);
  }
  throw Error(ErrorCode::InvalidArgument, "unknown proof case");
}

}  // namespace branchlab
