#include <cmath>
#include <cstdlib>

#include "doctest.h"

#include "branchlab/branching.hpp"
#include "branchlab/credence.hpp"
#include "branchlab/error.hpp"
#include "branchlab/random.hpp"

using namespace branchlab;

namespace {

const Subsystem kAgent{"A", 1, {"R"}};
const Subsystem kDet{"D", 3, {"R", "up", "down"}};
const Subsystem kSpin{"a", 2, {"up", "down"}};

Space once_space(std::size_t env_dim = 4) { return Space({kAgent, kDet, kSpin, Subsystem{"E", env_dim, {}}}); }

// a|up> + b|down> on the spin, everything else ready.
StateVector ready(cplx a, cplx b, std::size_t env_dim = 4) {
  const Space sp = once_space(env_dim);
  std::vector<cplx> amps(sp.dim(), 0.0);
  const std::size_t up[] = {0, 0, 0, 0}, down[] = {0, 0, 1, 0};
  amps[sp.index(up)] = a;
  amps[sp.index(down)] = b;
  return StateVector(sp, amps);
}

MeasureSpec spin_on_d() { return {"a", "D", "E", {}, 0.0}; }

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

const std::vector<std::string> kAD{"A", "D"};
const std::vector<std::string> kD{"D"};

}  // namespace

TEST_CASE("measurement entangles the spin with the detector and a fresh record") {
  const double h = 1.0 / std::sqrt(2.0);
  const auto out = measure(ready(h, h), spin_on_d());
  // Oracle: h|up>_a|up>_D|E1> + h|down>_a|down>_D|E2>; E0 is in use, so records start at E1.
  const Space sp = once_space();
  std::vector<cplx> want(sp.dim(), 0.0);
  const std::size_t up[] = {0, 1, 0, 1}, down[] = {0, 2, 1, 2};
  want[sp.index(up)] = h;
  want[sp.index(down)] = h;
  CHECK(max_abs_diff(out, StateVector(sp, want)) < 1e-15);
}

TEST_CASE("an eigenstate gives a single branch") {
  const auto out = measure(ready(1.0, 0.0), spin_on_d());
  const std::vector<std::string> rec{"E"};
  CHECK(components(out, rec).size() == 1);
  const auto bs = branch_decompose(reduced_density(out, kAD), kD);
  REQUIRE(bs.branches.size() == 1);
  CHECK(join_label(bs.branches[0].label) == "up");
  CHECK(bs.branches[0].weight == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("branch weights are the squared amplitudes") {
  const auto out = measure(ready(std::sqrt(2.0 / 3.0), cplx{0.0, std::sqrt(1.0 / 3.0)}), spin_on_d());
  const auto bs = branch_decompose(reduced_density(out, kAD), kD);
  REQUIRE(bs.branches.size() == 2);
  CHECK(join_label(bs.branches[0].label) == "up");
  CHECK(std::abs(bs.branches[0].weight - 2.0 / 3.0) < 1e-12);
  CHECK(std::abs(bs.branches[1].weight - 1.0 / 3.0) < 1e-12);
  for (const auto& b : bs.branches) CHECK(b.block.is_valid());
}

TEST_CASE("measure once, conditionally measure twice") {
  const Subsystem b_det{"B", 4, {"R", "up", "down", "X"}};
  const Subsystem b_spin{"b", 2, {"up", "down"}};
  const Space sp({kAgent, kDet, b_det, kSpin, b_spin, Subsystem{"E", 8, {}}});
  std::vector<cplx> amps(sp.dim(), 0.0);
  for (std::size_t x = 0; x < 2; ++x)
    for (std::size_t y = 0; y < 2; ++y) {
      const std::size_t d[] = {0, 0, 0, x, y, 0};
      amps[sp.index(d)] = 0.5;
    }
  const StateVector s0(sp, amps);
  const auto s1 = measure(s0, {"a", "D", "E", {}, 0.0});
  const auto s2 = conditional_measure(s1, {"D", "up"}, {"b", "B", "E", {}, 0.0});

  // Oracle over (a, D, B, b) after both steps: the down branch keeps b in superposition.
  std::map<std::vector<std::string>, double> grouped;
  for (std::size_t i = 0; i < s2.dim(); ++i) {
    const double w = std::norm(s2[i]);
    if (w < 1e-15) continue;
    const auto d = sp.digits(i);
    grouped[{kSpin.symbol(d[3]), kDet.symbol(d[1]), b_det.symbol(d[2]), b_spin.symbol(d[4])}] += w;
  }
  const std::map<std::vector<std::string>, double> want{{{"up", "up", "up", "up"}, 0.25},
                                                        {{"up", "up", "down", "down"}, 0.25},
                                                        {{"down", "down", "X", "up"}, 0.25},
                                                        {{"down", "down", "X", "down"}, 0.25}};
  REQUIRE(grouped.size() == want.size());
  for (const auto& [k, w] : want) CHECK(std::abs(grouped[k] - w) < 1e-12);

  const std::vector<std::string> ptr{"D", "B"};
  const auto bs = branch_decompose(reduced_density(s2, {"A", "D", "B"}), ptr);
  std::map<std::string, double> by_label;
  for (const auto& b : bs.branches) by_label[join_label(b.label)] = b.weight;
  CHECK(by_label.size() == 3);
  CHECK(std::abs(by_label["up,up"] - 0.25) < 1e-12);
  CHECK(std::abs(by_label["up,down"] - 0.25) < 1e-12);
  CHECK(std::abs(by_label["down,X"] - 0.5) < 1e-12);
}

TEST_CASE("measurement preconditions") {
  const double h = 1.0 / std::sqrt(2.0);
  const auto once = measure(ready(h, h), spin_on_d());
  CHECK(code_of([&] { (void)measure(once, spin_on_d()); }) == ErrorCode::NotReady);

  const Space small({kAgent, Subsystem{"D", 2, {"R", "up"}}, kSpin, Subsystem{"E", 4, {}}});
  std::vector<cplx> amps(small.dim(), 0.0);
  amps[0] = 1.0;
  CHECK(code_of([&] { (void)measure(StateVector(small, amps), spin_on_d()); }) == ErrorCode::DimensionTooSmall);

  CHECK(code_of([&] { (void)measure(ready(h, h, 1), spin_on_d()); }) == ErrorCode::DimensionTooSmall);

  const Space two({kAgent, kDet, Subsystem{"B", 4, {"R", "up", "down", "X"}}, kSpin, Subsystem{"E", 4, {}}});
  std::vector<cplx> z(two.dim(), 0.0);
  z[0] = 1.0;
  CHECK(code_of([&] {
          (void)conditional_measure(StateVector(two, z), {"D", "up"}, {"a", "B", "E", {}, 0.0});
        }) == ErrorCode::NoRecord);
}

TEST_CASE("measurement in a rotated basis") {
  const double h = 1.0 / std::sqrt(2.0);
  CMatrix x(2, 2);
  x << h, h, h, -h;
  const auto out = measure(ready(1.0, 0.0), {"a", "D", "E", x, 0.0});
  const auto bs = branch_decompose(reduced_density(out, kAD), kD);
  REQUIRE(bs.branches.size() == 2);
  for (const auto& b : bs.branches) CHECK(std::abs(b.weight - 0.5) < 1e-12);
}

TEST_CASE("leaky records stay coherent unless the threshold is raised") {
  const double h = 1.0 / std::sqrt(2.0);
  const auto out = measure(ready(h, h, 6), {"a", "D", "E", {}, 1e-6});
  // The spin itself is a perfect record, so coherence survives only when it is kept.
  CHECK(branch_decompose(reduced_density(out, kAD), kD, 1e-10).branches.size() == 2);
  const auto rho = reduced_density(out, {"A", "D", "a"});
  // Off-diagonal block between |up,up> and |down,down> is h*h*leakage = 5e-7.
  CHECK(std::abs(rho.mat()(2, 5) - 5e-7) < 1e-12);
  CHECK(code_of([&] { (void)branch_decompose(rho, kD, 1e-10); }) == ErrorCode::NotDecohered);
  CHECK(branch_decompose(rho, kD, 1e-6).branches.size() == 2);

  ::unsetenv("BRANCHLAB_EPS");
  CHECK(decoherence_eps() == 1e-10);
  CHECK(code_of([&] { (void)branch_decompose(rho, kD); }) == ErrorCode::NotDecohered);
  ::setenv("BRANCHLAB_EPS", "1e-6", 1);
  CHECK(decoherence_eps() == 1e-6);
  CHECK(branch_decompose(rho, kD).branches.size() == 2);
  ::setenv("BRANCHLAB_EPS", "garbage", 1);
  CHECK(decoherence_eps() == 1e-10);
  ::unsetenv("BRANCHLAB_EPS");
}

TEST_CASE("wiring drives a display from the detector record") {
  const double h = 1.0 / std::sqrt(2.0);
  const Subsystem disp{"S", 3, {"R", "1", "2"}};
  const auto base = measure(ready(h, h), spin_on_d());
  const auto with = tensor(base, StateVector::basis(Space({disp}), 0));
  const auto psi1 = apply_wiring(with, {{"D"}, {{"up", "1"}, {"down", "2"}}}, "S");
  const auto psi2 = apply_wiring(with, {{"D"}, {{"up", "2"}, {"down", "1"}}}, "S");

  const std::vector<std::string> ptr{"D", "S"};
  auto labels = [&](const StateVector& s) {
    std::map<std::string, double> m;
    for (const auto& b : branch_decompose(reduced_density(s, {"D", "S"}), ptr).branches) m[join_label(b.label)] = b.weight;
    return m;
  };
  const auto l1 = labels(psi1);
  CHECK(l1.size() == 2);
  CHECK(std::abs(l1.at("up,1") - 0.5) < 1e-12);
  CHECK(std::abs(l1.at("down,2") - 0.5) < 1e-12);
  const auto l2 = labels(psi2);
  CHECK(l2.count("up,2") == 1);
  CHECK(l2.count("down,1") == 1);

  // The agent and detector do not see the display.
  CHECK(max_abs_diff(reduced_density(psi1, kAD), reduced_density(base, kAD)) < 1e-15);
  CHECK(max_abs_diff(reduced_density(psi2, kAD), reduced_density(base, kAD)) < 1e-15);

  CHECK(code_of([&] { (void)apply_wiring(with, {{"D"}, {{"up", "1"}}}, "S"); }) == ErrorCode::IncompleteWiring);
  CHECK(code_of([&] { (void)apply_wiring(psi1, {{"D"}, {{"up", "1"}, {"down", "2"}}}, "S"); }) == ErrorCode::NotReady);
}

TEST_CASE("components and definite symbols") {
  const double h = 1.0 / std::sqrt(2.0);
  const auto out = measure(ready(h, -h), spin_on_d());
  const std::vector<std::string> rec{"E"};
  const auto comps = components(out, rec);
  REQUIRE(comps.size() == 2);
  CHECK(definite_symbol(out, rec, comps[0], "D") == std::optional<std::string>("up"));
  CHECK(definite_symbol(out, rec, comps[1], "D") == std::optional<std::string>("down"));

  // Before measuring, the single component is spread over the spin.
  const auto pre = ready(h, h);
  const auto c0 = components(pre, rec);
  REQUIRE(c0.size() == 1);
  CHECK_FALSE(definite_symbol(pre, rec, c0[0], "a").has_value());
}

TEST_CASE("random amplitudes: Born weights of the decomposition are the squared moduli") {
  for (std::uint64_t t = 0; t < 50; ++t) {
    auto rng = trial_rng(31, t);
    const auto spin = random_state(Space({kSpin}), rng);
    const auto out = measure(ready(spin[0], spin[1]), spin_on_d());
    const auto table = born_credences(reduced_density(out, kAD), kD);
    CHECK(std::abs(table["up"] - std::norm(spin[0])) < 1e-12);
    CHECK(std::abs(table["down"] - std::norm(spin[1])) < 1e-12);
  }
}
