#include "branchlab/credence.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "branchlab/error.hpp"

namespace branchlab {

CredenceTable::CredenceTable(std::map<std::string, double> entries, double tol) : entries_(std::move(entries)) {
  double sum = 0.0;
  for (const auto& [k, p] : entries_) {
    if (p < -tol || p > 1.0 + tol)
      throw Error(ErrorCode::InvalidArgument, "probability of '" + k + "' outside [0,1]: " + std::to_string(p));
    sum += p;
  }
  if (std::abs(sum - 1.0) > tol)
    throw Error(ErrorCode::InvalidArgument, "credences sum to " + std::to_string(sum));
}

double CredenceTable::operator[](const std::string& key) const {
  const auto it = entries_.find(key);
  return it == entries_.end() ? 0.0 : it->second;
}

double max_deviation(const CredenceTable& a, const CredenceTable& b) {
  double m = 0.0;
  for (const auto& [k, p] : a.entries()) m = std::max(m, std::abs(p - b[k]));
  for (const auto& [k, p] : b.entries()) m = std::max(m, std::abs(p - a[k]));
  return m;
}

CredenceTable born_credences(const DensityOperator& rho_ad, std::span<const std::string> pointers, double eps) {
  const auto bs = branch_decompose(rho_ad, pointers, eps);
  double total = 0.0;
  for (const auto& b : bs.branches) total += b.weight;
  std::map<std::string, double> out;
  for (const auto& b : bs.branches) out[join_label(b.label)] += b.weight / total;
  return CredenceTable(std::move(out));
}

CredenceTable indifference_credences(const BranchSet& bs, const std::map<std::string, std::size_t>& copies_per_branch) {
  std::size_t total = 0;
  for (const auto& b : bs.branches) {
    const auto it = copies_per_branch.find(join_label(b.label));
    if (it != copies_per_branch.end()) total += it->second;
  }
  if (total == 0) throw Error(ErrorCode::NoCopies, "no copies on any branch of " + bs.source);
  std::map<std::string, double> out;
  for (const auto& b : bs.branches) {
    const auto key = join_label(b.label);
    const auto it = copies_per_branch.find(key);
    const std::size_t n = it == copies_per_branch.end() ? 0 : it->second;
    out[key] = static_cast<double>(n) / static_cast<double>(total);
  }
  return CredenceTable(std::move(out));
}

namespace {

// Integer parts n_k >= 1 with sum D minimizing max_k |n_k - D w_k|: start from
// the rounded targets and move one unit at a time where it hurts least.
std::vector<std::uint64_t> apportion(std::span<const double> w, std::uint64_t d) {
  const std::size_t n = w.size();
  std::vector<std::int64_t> parts(n);
  std::int64_t sum = 0;
  for (std::size_t k = 0; k < n; ++k) {
    parts[k] = std::max<std::int64_t>(1, std::llround(w[k] * static_cast<double>(d)));
    sum += parts[k];
  }
  const auto target = static_cast<std::int64_t>(d);
  while (sum < target) {
    std::size_t best = 0;
    double gap = -1e300;
    for (std::size_t k = 0; k < n; ++k) {
      const double g = w[k] * static_cast<double>(d) - static_cast<double>(parts[k]);
      if (g > gap) { gap = g; best = k; }
    }
    ++parts[best];
    ++sum;
  }
  while (sum > target) {
    std::size_t best = n;
    double gap = -1e300;
    for (std::size_t k = 0; k < n; ++k) {
      if (parts[k] <= 1) continue;
      const double g = static_cast<double>(parts[k]) - w[k] * static_cast<double>(d);
      if (g > gap) { gap = g; best = k; }
    }
    --parts[best];
    --sum;
  }
  return {parts.begin(), parts.end()};
}

}  // namespace

RationalWeights rationalize(std::span<const double> weights, std::uint64_t max_denominator) {
  if (weights.empty()) throw Error(ErrorCode::InvalidArgument, "no weights to rationalize");
  if (max_denominator < 1) throw Error(ErrorCode::InvalidArgument, "max_denominator must be >= 1");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw Error(ErrorCode::InvalidArgument, "weights must be positive");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-8) throw Error(ErrorCode::InvalidArgument, "weights sum to " + std::to_string(sum));

  RationalWeights best;
  double best_err = std::numeric_limits<double>::infinity();
  for (std::uint64_t d = weights.size(); d <= max_denominator; ++d) {
    auto parts = apportion(weights, d);
    double err = 0.0;
    for (std::size_t k = 0; k < weights.size(); ++k)
      err = std::max(err, std::abs(static_cast<double>(parts[k]) / static_cast<double>(d) - weights[k]));
    if (err < best_err - 1e-14) {
      best_err = err;
      best.c_squared = std::move(parts);
      best.t_squared = d;
      best.approximation_error = err;
      if (err == 0.0) break;
    }
  }
  if (!(best_err < 1.0 / static_cast<double>(max_denominator))) {
    std::ostringstream msg;
    msg << "best error " << best_err << " not below 1/" << max_denominator;
    throw Error(ErrorCode::ApproximationFailed, msg.str());
  }
  return best;
}

StateVector equal_amplitude_refine(const StateVector& s, const RationalWeights& rw, const std::string& env,
                                   const std::string& ancilla) {
  const std::vector<std::string> rec{env};
  const auto comps = components(s, rec);
  if (comps.size() != rw.c_squared.size())
    throw Error(ErrorCode::WeightMismatch, "state has " + std::to_string(comps.size()) + " branches, weights give " +
                                               std::to_string(rw.c_squared.size()));
  const double tol = rw.approximation_error + 1e-10;
  const auto t2 = static_cast<double>(rw.t_squared);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const double expected = static_cast<double>(rw.c_squared[k]) / t2;
    if (std::abs(comps[k].weight - expected) > tol) {
      std::ostringstream msg;
      msg << "branch " << k << " has weight " << comps[k].weight << ", expected " << expected;
      throw Error(ErrorCode::WeightMismatch, msg.str());
    }
  }

  const std::uint64_t anc_dim = *std::max_element(rw.c_squared.begin(), rw.c_squared.end());
  Subsystem anc{ancilla, static_cast<std::size_t>(anc_dim), {}};
  const StateVector padded = tensor(s, StateVector::basis(Space({anc}), 0));

  // Block-diagonal over environment records: a Householder reflection taking
  // |0> to the uniform superposition of the first c_k^2 ancilla states.
  const std::size_t env_dim = s.space().at(env).dim;
  const auto m = static_cast<Eigen::Index>(anc_dim);
  CMatrix u = CMatrix::Identity(static_cast<Eigen::Index>(env_dim) * m, static_cast<Eigen::Index>(env_dim) * m);
  for (std::size_t k = 0; k < comps.size(); ++k) {
    const std::uint64_t c2 = rw.c_squared[k];
    if (c2 == 1) continue;
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(m);
    for (std::uint64_t j = 0; j < c2; ++j) v(static_cast<Eigen::Index>(j)) = 1.0 / std::sqrt(static_cast<double>(c2));
    Eigen::VectorXcd w = -v;
    w(0) += 1.0;
    const CMatrix h = CMatrix::Identity(m, m) - 2.0 * (w * w.adjoint()) / w.squaredNorm();
    const auto off = static_cast<Eigen::Index>(comps[k].record[0]) * m;
    u.block(off, off, m, m) = h;
  }
  return apply_unitary(padded, UnitaryOp({env, ancilla}, std::move(u)));
}

CountedCredences refine_and_count(const StateVector& s, const std::string& detector, const std::string& env,
                                  std::uint64_t max_denominator) {
  const std::vector<std::string> rec{env};
  const auto comps = components(s, rec);
  std::vector<double> w;
  for (const auto& c : comps) w.push_back(c.weight);
  double total_w = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= total_w;
  const auto rw = rationalize(w, max_denominator);

  const std::string anc = env + "'";
  const StateVector refined = equal_amplitude_refine(s, rw, env, anc);
  const std::vector<std::string> rec2{env, anc};
  const auto pieces = components(refined, rec2);
  const double unit = 1.0 / static_cast<double>(rw.t_squared);

  CountedCredences out;
  out.approximation_error = rw.approximation_error;
  for (const auto& p : pieces) {
    if (std::abs(p.weight - unit) > rw.approximation_error + 1e-10)
      throw Error(ErrorCode::WeightMismatch, "refined component weight " + std::to_string(p.weight) +
                                                 " differs from 1/T^2 = " + std::to_string(unit));
    const auto sym = definite_symbol(refined, rec2, p, detector);
    if (!sym) throw Error(ErrorCode::NotDecohered, "refined component has no definite '" + detector + "' record");
    ++out.counts[*sym];
    ++out.total;
  }
  if (out.total != rw.t_squared)
    throw Error(ErrorCode::WeightMismatch, "counted " + std::to_string(out.total) + " components, expected T^2 = " +
                                               std::to_string(rw.t_squared));
  std::map<std::string, double> probs;
  for (const auto& [sym, n] : out.counts) probs[sym] = static_cast<double>(n) / static_cast<double>(out.total);
  out.table = CredenceTable(std::move(probs));
  return out;
}

EspReport esp_invariance_check(const StateVector& s, const UnitaryOp& u_env, std::span<const std::string> observed,
                               std::span<const std::string> pointers) {
  for (const auto& t : u_env.targets())
    if (std::find(observed.begin(), observed.end(), t) != observed.end())
      throw Error(ErrorCode::NotEnvironmentOnly, "unitary acts on observed subsystem '" + t + "'");
  EspReport r;
  r.before = born_credences(reduced_density(s, observed), pointers);
  r.after = born_credences(reduced_density(apply_unitary(s, u_env), observed), pointers);
  r.max_deviation = max_deviation(r.before, r.after);
  r.pass = r.max_deviation < 1e-10;
  return r;
}

std::string ObserverCopy::key() const { return id + "[" + branch + "]@" + std::to_string(time); }

CredenceTable strong_esp(std::span<const ObserverCopy> copies) {
  double total = 0.0;
  for (const auto& c : copies) {
    if (!(c.weight >= 0.0) || !std::isfinite(c.weight))
      throw Error(ErrorCode::InvalidArgument, "copy " + c.key() + " has invalid weight");
    total += c.weight;
  }
  if (!(total > 0.0)) throw Error(ErrorCode::NoSupport, "every copy has zero weight");
  std::map<std::string, double> out;
  for (const auto& c : copies) {
    if (out.count(c.key())) throw Error(ErrorCode::InvalidArgument, "duplicate copy " + c.key());
    out[c.key()] = c.weight / total;
  }
  return CredenceTable(std::move(out));
}

CredenceTable indifference_over_copies(std::span<const ObserverCopy> copies) {
  if (copies.empty()) throw Error(ErrorCode::NoCopies, "no copies");
  std::map<std::string, double> out;
  for (const auto& c : copies) out[c.key()] = 1.0 / static_cast<double>(copies.size());
  return CredenceTable(std::move(out));
}

double page_aggregate(std::span<const PageObserver> observers) {
  if (observers.empty()) throw Error(ErrorCode::NoCopies, "no observers");
  std::vector<ObserverCopy> copies;
  for (const auto& o : observers) {
    if (std::abs(o.up_amp_sq + o.down_amp_sq - 1.0) > 1e-12)
      throw Error(ErrorCode::InvalidArgument, "spin amplitudes of " + o.copy.key() + " are not normalized");
    copies.push_back(o.copy);
  }
  const auto p = strong_esp(copies);
  double up = 0.0;
  for (const auto& o : observers) up += p[o.copy.key()] * o.up_amp_sq;
  return up;
}

SwapReport swap_check(const StateVector& s, std::span<const std::string> record_labels, std::size_t i, std::size_t j,
                      std::span<const std::string> observed) {
  const auto comps = components(s, record_labels);
  if (i >= comps.size() || j >= comps.size())
    throw Error(ErrorCode::InvalidArgument, "component index out of range");
  SwapReport r{i, j, std::abs(comps[i].weight - comps[j].weight), 0.0, false};
  if (r.weight_gap > 1e-12)
    throw Error(ErrorCode::NotSwappable, "components " + std::to_string(i) + " and " + std::to_string(j) +
                                             " differ in weight by " + std::to_string(r.weight_gap));

  // Permutation on the record factors exchanging the two joint records.
  const Space& sp = s.space();
  const auto pr = sp.positions(record_labels);
  std::vector<cplx> out(s.dim());
  for (std::size_t idx = 0; idx < s.dim(); ++idx) {
    auto digits = sp.digits(idx);
    std::vector<std::size_t> rec;
    for (auto p : pr) rec.push_back(digits[p]);
    const std::vector<std::size_t>* repl = nullptr;
    if (rec == comps[i].record) repl = &comps[j].record;
    else if (rec == comps[j].record) repl = &comps[i].record;
    if (repl)
      for (std::size_t k = 0; k < pr.size(); ++k) digits[pr[k]] = (*repl)[k];
    out[sp.index(digits)] = s[idx];
  }
  const StateVector swapped(sp, std::move(out));
  r.rho_deviation = max_abs_diff(reduced_density(s, observed), reduced_density(swapped, observed));
  r.pass = r.rho_deviation < 1e-10;
  return r;
}

SwapClosure swap_closure(const StateVector& s, std::span<const std::string> record_labels,
                         std::span<const std::string> observed) {
  const auto comps = components(s, record_labels);
  std::vector<std::size_t> parent(comps.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  SwapClosure out;
  for (std::size_t i = 0; i < comps.size(); ++i)
    for (std::size_t j = i; j < comps.size(); ++j) {
      if (std::abs(comps[i].weight - comps[j].weight) > 1e-12) continue;
      auto r = swap_check(s, record_labels, i, j, observed);
      if (r.pass) parent[find(i)] = find(j);
      out.reports.push_back(r);
    }
  std::size_t classes = 0;
  for (std::size_t i = 0; i < comps.size(); ++i) classes += find(i) == i;
  out.equiprobable = classes == 1;
  if (out.equiprobable) {
    std::map<std::string, double> t;
    for (std::size_t i = 0; i < comps.size(); ++i) t[std::to_string(i)] = 1.0 / static_cast<double>(comps.size());
    out.table = CredenceTable(std::move(t));
  }
  return out;
}

StateVector branch_state(std::span<const cplx> amplitudes, std::span<const std::size_t> outcomes,
                         std::size_t n_outcomes) {
  if (amplitudes.size() != outcomes.size() || amplitudes.empty())
    throw Error(ErrorCode::InvalidArgument, "one outcome per amplitude required");
  Subsystem a{"A", 1, {"R"}};
  Subsystem d{"D", n_outcomes + 1, {"R"}};
  for (std::size_t k = 0; k < n_outcomes; ++k) d.symbols.push_back("d" + std::to_string(k));
  Subsystem e{"E", amplitudes.size(), {}};
  for (std::size_t k = 0; k < amplitudes.size(); ++k) e.symbols.push_back("E" + std::to_string(k));
  Space sp({a, d, e});
  std::vector<cplx> amps(sp.dim(), cplx{0.0, 0.0});
  for (std::size_t k = 0; k < amplitudes.size(); ++k) {
    if (outcomes[k] >= n_outcomes) throw Error(ErrorCode::InvalidArgument, "outcome index out of range");
    const std::size_t digits[] = {0, outcomes[k] + 1, k};
    amps[sp.index(digits)] = amplitudes[k];
  }
  return StateVector(std::move(sp), std::move(amps));
}

}  // namespace branchlab
