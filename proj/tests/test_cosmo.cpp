#include <cmath>

#include "doctest.h"

#include "branchlab/cosmo.hpp"
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

BranchHistory expo(std::string name, double gamma, double omega, double n0 = 1.0, double a = 1.0) {
  BranchHistory h;
  h.name = std::move(name);
  h.gamma = gamma;
  h.omega = omega;
  h.n0 = n0;
  h.A = a;
  return h;
}

BranchHistory table(std::vector<double> ts, std::vector<double> alphas, std::vector<double> ns) {
  BranchHistory h;
  h.name = "tab";
  h.form = BranchHistory::Form::Tabulated;
  h.ts = std::move(ts);
  h.alphas = std::move(alphas);
  h.ns = std::move(ns);
  return h;
}

// Oracle: integral of A^2 n0 e^{(omega - 2 gamma) t} over [t0, t1].
double exact(double a, double n0, double gamma, double omega, double t0, double t1) {
  const double r = omega - 2.0 * gamma;
  if (std::isinf(t1)) return a * a * n0 * std::exp(r * t0) / -r;
  return a * a * n0 * (std::exp(r * t1) - std::exp(r * t0)) / r;
}

}  // namespace

TEST_CASE("exponential family with gamma = omega = 1 has measure one") {
  const auto m = branch_measure(expo("c", 1.0, 1.0));
  CHECK_FALSE(m.divergent);
  CHECK(m.method == "closed-form");
  CHECK(std::abs(m.value - 1.0) < 1e-15);
}

TEST_CASE("divergence is decided by 2 gamma against omega") {
  CHECK(branch_measure(expo("r", 0.4, 1.0)).divergent);
  CHECK(branch_measure(expo("edge", 0.5, 1.0)).divergent);
  CHECK_FALSE(branch_measure(expo("just", 0.51, 1.0)).divergent);
  CHECK(std::isinf(branch_measure(expo("r", 0.4, 1.0)).value));
  CHECK(quadrature_measure(expo("r", 0.4, 1.0)).divergent);

  auto bounded = expo("b", 0.4, 1.0);
  bounded.t1 = 2.0;
  const auto m = branch_measure(bounded);
  CHECK_FALSE(m.divergent);
  CHECK(std::abs(m.value - exact(1.0, 1.0, 0.4, 1.0, 0.0, 2.0)) < 1e-12);
}

TEST_CASE("no observers means no measure") {
  const auto m = branch_measure(expo("empty", 0.1, 1.0, 0.0));
  CHECK_FALSE(m.divergent);
  CHECK(m.value == 0.0);
}

TEST_CASE("quadrature agrees with the closed form") {
  for (std::uint64_t t = 0; t < 40; ++t) {
    auto rng = trial_rng(51, t);
    std::uniform_real_distribution<double> g(0.6, 3.0), w(0.0, 1.0), n(0.5, 4.0), a(0.5, 1.5), t0(0.0, 2.0);
    auto h = expo("f", g(rng), w(rng), n(rng), a(rng));
    h.t0 = t0(rng);
    if (t % 3 == 0) h.t1 = h.t0 + 3.0;
    const auto closed = branch_measure(h);
    CHECK(std::abs(closed.value - exact(h.A, h.n0, h.gamma, h.omega, h.t0, h.t1)) < 1e-12 * std::max(1.0, closed.value));
    const auto quad = quadrature_measure(h);
    CHECK(std::abs(quad.value - closed.value) < 1e-8);
  }
}

TEST_CASE("tabulated families") {
  // t^2 on [0, 2] sampled at odd count: Simpson is exact for cubics.
  std::vector<double> ts, alphas, ns;
  for (int i = 0; i <= 8; ++i) {
    const double x = 0.25 * i;
    ts.push_back(x);
    alphas.push_back(x);
    ns.push_back(1.0);
  }
  const auto s = branch_measure(table(ts, alphas, ns));
  CHECK(s.method == "simpson");
  CHECK(std::abs(s.value - 8.0 / 3.0) < 1e-12);

  // Uneven spacing: trapezoid on f = t.
  const auto tr = branch_measure(table({0.0, 0.5, 2.0}, {0.0, std::sqrt(0.5), std::sqrt(2.0)}, {1.0, 1.0, 1.0}));
  CHECK(tr.method == "trapezoid");
  CHECK(std::abs(tr.value - 2.0) < 1e-12);

  CHECK(code_of([] { (void)branch_measure(table({0.0, 1.0}, {1.0, 1.0}, {1.0, -1.0})); }) == ErrorCode::InvalidDensity);
  CHECK(code_of([] { (void)branch_measure(table({0.0}, {1.0}, {1.0})); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { (void)branch_measure(table({1.0, 0.0}, {1.0, 1.0}, {1.0, 1.0})); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("parameter validation") {
  CHECK(code_of([] { (void)branch_measure(expo("neg", 1.0, 1.0, -1.0)); }) == ErrorCode::InvalidDensity);
  CHECK(code_of([] { (void)branch_measure(expo("a", 1.0, 1.0, 1.0, 0.0)); }) == ErrorCode::InvalidArgument);
  auto back = expo("back", 1.0, 1.0);
  back.t0 = 2.0;
  back.t1 = 1.0;
  CHECK(code_of([&] { (void)branch_measure(back); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("normalizing families") {
  auto slow = expo("slow", 2.0, 1.0, 3.0);
  const std::vector<BranchHistory> both{expo("convergent", 1.0, 1.0), slow};
  const auto fm = normalize_families(both);
  REQUIRE(fm.table);
  CHECK(std::abs((*fm.table)["convergent"] - 0.5) < 1e-12);
  CHECK(std::abs((*fm.table)["slow"] - 0.5) < 1e-12);

  const std::vector<BranchHistory> div{expo("convergent", 1.0, 1.0), expo("runaway", 0.4, 1.0)};
  const auto fd = normalize_families(div);
  CHECK_FALSE(fd.table);
  CHECK(fd.divergent_family == std::optional<std::string>("runaway"));

  const std::vector<BranchHistory> zero{expo("z", 1.0, 1.0, 0.0)};
  CHECK(code_of([&] { (void)normalize_families(zero); }) == ErrorCode::NoSupport);
  CHECK(code_of([] { (void)normalize_families({}); }) == ErrorCode::InvalidArgument);
  const std::vector<BranchHistory> twice{expo("x", 1.0, 1.0), expo("x", 2.0, 1.0)};
  CHECK(code_of([&] { (void)normalize_families(twice); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("integrand samples") {
  const auto pts = integrand_samples(expo("c", 1.0, 1.0), 11);
  REQUIRE(pts.size() == 11);
  CHECK(pts.front()[0] == 0.0);
  CHECK(std::abs(pts.front()[1] - 1.0) < 1e-15);
  for (const auto& p : pts) CHECK(std::abs(p[1] - std::exp(-p[0])) < 1e-12);
  const auto tab = integrand_samples(table({0.0, 1.0, 3.0}, {1.0, 2.0, 1.0}, {1.0, 1.0, 2.0}));
  REQUIRE(tab.size() == 3);
  CHECK(tab[1][1] == 4.0);
}
