#include "branchlab/verify.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

#include "branchlab/credence.hpp"
#include "branchlab/error.hpp"
#include "branchlab/proof.hpp"
#include "branchlab/random.hpp"

namespace branchlab {

namespace {

std::size_t uniform_int(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

std::vector<double> random_phases(Rng& rng, std::size_t n) {
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  std::vector<double> out(n);
  for (auto& p : out) p = u(rng);
  return out;
}

// n positive integers summing to total (n <= total).
std::vector<std::uint64_t> composition(Rng& rng, std::uint64_t total, std::size_t n) {
  std::vector<std::uint64_t> points(total - 1);
  std::iota(points.begin(), points.end(), 1);
  std::vector<std::uint64_t> cuts;
  std::sample(points.begin(), points.end(), std::back_inserter(cuts), n - 1, rng);
  cuts.push_back(total);
  std::sort(cuts.begin(), cuts.end());
  std::vector<std::uint64_t> out;
  std::uint64_t prev = 0;
  for (auto c : cuts) {
    out.push_back(c - prev);
    prev = c;
  }
  return out;
}

std::vector<cplx> amplitudes(std::span<const double> weights, std::span<const double> phases) {
  std::vector<cplx> out;
  for (std::size_t k = 0; k < weights.size(); ++k) out.push_back(std::polar(std::sqrt(weights[k]), phases[k]));
  return out;
}

std::vector<double> weights_of(std::span<const cplx> amps) {
  std::vector<double> out;
  for (auto a : amps) out.push_back(std::norm(a));
  return out;
}

CredenceTable born_of(const StateVector& s) {
  const std::vector<std::string> pointers{"D"};
  return born_credences(reduced_density(s, {"A", "D"}), pointers);
}

struct Check {
  TrialResult r;

  explicit Check(std::uint64_t index) { r.index = index; r.pass = true; }

  void expect(const std::string& what, double dev, double tol) {
    r.max_deviation = std::max(r.max_deviation, dev);
    if (!(dev < tol)) fail(what + " deviates by " + fmt(dev));
  }
  void fail(const std::string& what) {
    r.pass = false;
    if (!r.detail.empty()) r.detail += "; ";
    r.detail += what;
  }
  static std::string fmt(double v) {
    std::ostringstream os;
    os.precision(3);
    os << v;
    return os.str();
  }
};

}  // namespace

std::string_view to_string(Suite s) noexcept {
  switch (s) {
    case Suite::AppendixB: return "appendix-b";
    case Suite::AppendixC: return "appendix-c";
    case Suite::Proofs: return "proofs";
    case Suite::StrongEsp: return "strong-esp";
  }
  return "?";
}

Suite parse_suite(std::string_view s) {
  for (auto k : {Suite::AppendixB, Suite::AppendixC, Suite::Proofs, Suite::StrongEsp})
    if (s == to_string(k)) return k;
  throw Error(ErrorCode::InvalidArgument,
              "unknown suite '" + std::string(s) + "' (expected appendix-b, appendix-c, proofs or strong-esp)");
}

TrialResult reduced_dynamics_trial(std::uint64_t seed, std::uint64_t index) {
  auto rng = trial_rng(seed, index);
  Check c(index);
  const std::size_t da = uniform_int(rng, 2, 4);
  const std::size_t db = uniform_int(rng, 2, 4);
  const std::size_t dc = uniform_int(rng, 1, 3);
  const Space sp({{"A", da, {}}, {"B", db, {}}, {"C", dc, {}}});
  const auto s = random_state(sp, rng);
  const auto ua = random_unitary({"A"}, da, rng);
  const auto ub = random_unitary({"B"}, db, rng);
  const auto rho_a = reduced_density(s, {"A"});

  const auto lhs = partial_trace(density_of(apply_unitary(s, kron(ua, ub))), {"A"});
  c.expect("Tr_BC(U rho U^dag) vs U_A rho_A U_A^dag", max_abs_diff(lhs, evolve(rho_a, ua)), 1e-12);

  const auto u_rest = random_unitary({"B", "C"}, db * dc, rng);
  c.expect("rho_A under a unitary on B,C", max_abs_diff(reduced_density(apply_unitary(s, u_rest), {"A"}), rho_a), 1e-12);
  return c.r;
}

TrialResult esp_environment_trial(std::uint64_t seed, std::uint64_t index) {
  auto rng = trial_rng(seed, index);
  Check c(index);
  const std::size_t n = uniform_int(rng, 2, 5);
  const std::size_t outcomes = uniform_int(rng, 2, n);
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = u(rng);
  const double sum = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= sum;
  std::vector<std::size_t> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = k % outcomes;
  const auto amps = amplitudes(w, random_phases(rng, n));
  const auto s = branch_state(amps, out, outcomes);
  const std::vector<std::string> observed{"A", "D"}, pointers{"D"};
  const auto rep = esp_invariance_check(s, random_unitary({"E"}, n, rng), observed, pointers);
  c.expect("Born credences under an environment unitary", rep.max_deviation, 1e-10);
  return c.r;
}

TrialResult appendix_c_trial(std::uint64_t seed, std::uint64_t index) {
  auto rng = trial_rng(seed, index);
  Check c(index);
  const std::size_t n = uniform_int(rng, 2, 6);
  const std::uint64_t t2 = uniform_int(rng, n, 50);
  const auto m = composition(rng, t2, n);
  const std::size_t outcomes = uniform_int(rng, 2, n);
  std::vector<std::size_t> out(n);
  for (auto& o : out) o = uniform_int(rng, 0, outcomes - 1);
  std::vector<double> w;
  for (auto mk : m) w.push_back(static_cast<double>(mk) / static_cast<double>(t2));
  const auto amps = amplitudes(w, random_phases(rng, n));
  const auto s = branch_state(amps, out, outcomes);

  const auto counted = refine_and_count(s, "D", "E", 100);
  c.expect("refined counts vs Born", max_deviation(counted.table, born_of(s)), 1e-9);

  const auto weights = weights_of(amps);
  const auto refined = equal_amplitude_refine(s, rationalize(weights, 100), "E");
  c.expect("rho_AD after refinement",
           max_abs_diff(reduced_density(refined, {"A", "D"}), reduced_density(s, {"A", "D"})), 1e-12);
  return c.r;
}

TrialResult proof_trial(std::uint64_t seed, std::uint64_t index) {
  auto rng = trial_rng(seed, index);
  Check c(index);
  ProofCase pc;
  std::map<std::string, double> expected;
  if (index == 0) {
    pc = ProofCase::half_half();
    expected = {{"up", 0.5}, {"down", 0.5}};
  } else if (index == 1) {
    pc = ProofCase::one_third_two_thirds();
    expected = {{"up", 2.0 / 3.0}, {"down", 1.0 / 3.0}};
  } else {
    const std::size_t n = uniform_int(rng, 2, 4);
    const std::uint64_t t2 = uniform_int(rng, n, 12);
    std::vector<double> w;
    for (auto mk : composition(rng, t2, n)) w.push_back(static_cast<double>(mk) / static_cast<double>(t2));
    for (std::size_t k = 0; k < n; ++k) expected["d" + std::to_string(k)] = w[k];
    pc = ProofCase::general(w, random_phases(rng, n));
  }
  const auto rep = replay_proof(pc);
  for (const auto& p : rep.premises) {
    c.r.max_deviation = std::max(c.r.max_deviation, p.max_deviation);
    if (!p.pass) c.fail(rep.case_id + " premise " + p.step + " failed");
  }
  if (!rep.conclusion) c.fail(rep.case_id + " drew no conclusion");
  else c.expect(rep.case_id + " conclusion vs Born", max_deviation(*rep.conclusion, CredenceTable(expected)), 1e-10);
  return c.r;
}

TrialResult strong_esp_trial(std::uint64_t seed, std::uint64_t index) {
  auto rng = trial_rng(seed, index);
  Check c(index);
  std::uniform_real_distribution<double> u(0.05, 1.0);

  // Equal weights: Strong ESP is Indifference.
  {
    const std::size_t n = uniform_int(rng, 1, 8);
    const double w = u(rng);
    std::vector<ObserverCopy> copies;
    for (std::size_t k = 0; k < n; ++k) copies.push_back({"O" + std::to_string(k), "b", static_cast<int>(k), w});
    c.expect("equal-weight limit", max_deviation(strong_esp(copies), indifference_over_copies(copies)), 1e-12);
  }
  // One copy per branch: Strong ESP is Born.
  std::vector<ObserverCopy> copies;
  {
    const std::size_t n = uniform_int(rng, 1, 8);
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      copies.push_back({"O", "b" + std::to_string(k), 1, u(rng)});
      sum += copies.back().weight;
    }
    std::map<std::string, double> born;
    for (auto& cp : copies) {
      cp.weight /= sum;
      born[cp.key()] = cp.weight;
    }
    c.expect("one-copy-per-branch limit", max_deviation(strong_esp(copies), CredenceTable(born)), 1e-12);
  }
  // Common rescaling of the weights changes nothing.
  {
    const double lambda = std::exp(std::uniform_real_distribution<double>(-7.0, 7.0)(rng));
    auto scaled = copies;
    for (auto& cp : scaled) cp.weight *= lambda;
    c.expect("scale invariance", max_deviation(strong_esp(scaled), strong_esp(copies)), 1e-12);
  }
  // Branch phases change no credence.
  {
    const std::size_t n = uniform_int(rng, 2, 5);
    const std::uint64_t t2 = uniform_int(rng, n, 30);
    std::vector<double> w;
    for (auto mk : composition(rng, t2, n)) w.push_back(static_cast<double>(mk) / static_cast<double>(t2));
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), 0);
    const auto plain = branch_state(amplitudes(w, std::vector<double>(n, 0.0)), out, n);
    const auto phased = branch_state(amplitudes(w, random_phases(rng, n)), out, n);
    c.expect("phase invariance (Born)", max_deviation(born_of(plain), born_of(phased)), 1e-12);
    c.expect("phase invariance (counting)",
             max_deviation(refine_and_count(plain, "D", "E").table, refine_and_count(phased, "D", "E").table), 1e-12);
  }
  // Equal amplitudes close into one swap class; unequal ones do not.
  {
    const std::size_t n = uniform_int(rng, 2, 5);
    std::vector<std::size_t> out(n);
    std::iota(out.begin(), out.end(), 0);
    const auto s = branch_state(amplitudes(std::vector<double>(n, 1.0 / static_cast<double>(n)), random_phases(rng, n)),
                                out, n);
    const std::vector<std::string> records{"D", "E"}, observed{"A", "D"};
    const auto closure = swap_closure(s, records, observed);
    if (!closure.equiprobable) c.fail("equal amplitudes not closed under swaps");
    for (const auto& r : closure.reports) c.r.max_deviation = std::max(c.r.max_deviation, r.rho_deviation);

    const double a = std::uniform_real_distribution<double>(0.1, 0.4)(rng);
    const std::vector<double> w{a, 1.0 - a};
    const std::vector<std::size_t> two{0, 1};
    if (swap_closure(branch_state(amplitudes(w, random_phases(rng, 2)), two, 2), records, observed).equiprobable)
      c.fail("unequal amplitudes judged equiprobable");
  }
  return c.r;
}

TrialResult run_trial(Suite suite, std::uint64_t seed, std::uint64_t index) {
  try {
    switch (suite) {
      case Suite::AppendixB: {
        auto a = reduced_dynamics_trial(seed, index);
        const auto b = esp_environment_trial(seed, index);
        a.pass = a.pass && b.pass;
        a.max_deviation = std::max(a.max_deviation, b.max_deviation);
        if (!b.detail.empty()) a.detail += (a.detail.empty() ? "" : "; ") + b.detail;
        return a;
      }
      case Suite::AppendixC: return appendix_c_trial(seed, index);
      case Suite::Proofs: return proof_trial(seed, index);
      case Suite::StrongEsp: return strong_esp_trial(seed, index);
    }
  } catch (const std::exception& e) {
    return {index, false, 0.0, e.what()};
  }
  return {index, false, 0.0, "unknown suite"};
}

bool SuiteResult::pass() const {
  return std::all_of(trials.begin(), trials.end(), [](const TrialResult& t) { return t.pass; });
}

const TrialResult* SuiteResult::first_failure() const {
  for (const auto& t : trials)
    if (!t.pass) return &t;
  return nullptr;
}

SuiteResult run_suite(Suite suite, std::uint64_t count, std::uint64_t seed, std::uint64_t start, bool parallel) {
  if (count == 0) throw Error(ErrorCode::InvalidArgument, "need at least one trial");
  SuiteResult out{suite, seed, start, std::vector<TrialResult>(count)};
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(dynamic) if (parallel)
  for (std::int64_t k = 0; k < n; ++k)
    out.trials[static_cast<std::size_t>(k)] = run_trial(suite, seed, start + static_cast<std::uint64_t>(k));
  return out;
}

}  // namespace branchlab
