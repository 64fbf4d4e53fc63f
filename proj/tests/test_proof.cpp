#include <cmath>

#include "doctest.h"

#include "branchlab/error.hpp"
#include "branchlab/proof.hpp"

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

const Subsystem kScreen{"S", 3, {"R", "1", "2"}};

// Two-outcome state with a display wired to the detector record.
StateVector wired(double w_up, bool flip) {
  const cplx amps[] = {std::sqrt(w_up), std::sqrt(1.0 - w_up)};
  const std::size_t outs[] = {0, 1};
  const auto s = tensor(branch_state(amps, outs, 2), StateVector::basis(Space({kScreen}), 0));
  const Wiring w{{"D"}, {{"d0", flip ? "2" : "1"}, {"d1", flip ? "1" : "2"}}};
  return apply_wiring(s, w, "S");
}

}  // namespace

TEST_CASE("half/half replay") {
  const auto r = replay_proof(ProofCase::half_half());
  REQUIRE(r.conclusion);
  for (const auto& p : r.premises) CHECK(p.pass);
  CHECK(std::abs((*r.conclusion)["up"] - 0.5) < 1e-10);
  CHECK(std::abs((*r.conclusion)["down"] - 0.5) < 1e-10);
}

TEST_CASE("one third / two thirds replay") {
  const auto r = replay_proof(ProofCase::one_third_two_thirds());
  REQUIRE(r.conclusion);
  for (const auto& p : r.premises) CHECK(p.pass);
  CHECK(std::abs((*r.conclusion)["up"] - 2.0 / 3.0) < 1e-10);
  CHECK(std::abs((*r.conclusion)["down"] - 1.0 / 3.0) < 1e-10);
}

TEST_CASE("general replay reproduces rational weights with phases") {
  const std::vector<std::vector<double>> cases{{0.2, 0.8}, {0.25, 0.25, 0.5}, {1.0 / 6, 2.0 / 6, 3.0 / 6}, {0.1, 0.2, 0.3, 0.4}};
  for (const auto& w : cases) {
    std::vector<double> phases;
    for (std::size_t k = 0; k < w.size(); ++k) phases.push_back(0.7 * static_cast<double>(k) + 0.3);
    const auto r = replay_proof(ProofCase::general(w, phases));
    REQUIRE(r.conclusion);
    for (std::size_t k = 0; k < w.size(); ++k) CHECK(std::abs((*r.conclusion)["d" + std::to_string(k)] - w[k]) < 1e-10);
  }
}

TEST_CASE("general replay rejects malformed cases") {
  CHECK(code_of([] { (void)replay_proof(ProofCase::general({}, {})); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { (void)replay_proof(ProofCase::general({0.5, 0.5}, {0.0})); }) == ErrorCode::InvalidArgument);
  CHECK(code_of([] { (void)replay_proof(ProofCase::general({1.0, 0.0}, {})); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("case ids differ") {
  CHECK(ProofCase::half_half().id() != ProofCase::one_third_two_thirds().id());
}

TEST_CASE("derivation: flipped displays on equal weights are equiprobable") {
  Derivation d;
  const std::vector<std::string> rec{"E"};
  d.add_state("psi1", "psi", wired(0.5, false), rec);
  d.add_state("psi2", "psi", wired(0.5, true), rec);
  CHECK_FALSE(d.equiprobable("psi"));
  const auto p = d.esp("swap", "psi1", "psi2", "A", "S");
  CHECK(p.pass);
  CHECK(p.max_deviation < 1e-12);
  CHECK(d.equiprobable("psi"));
  CHECK(d.component_count("psi1") == 2);
  const auto t = d.outcome_table("psi1", "D");
  CHECK(std::abs(t["d0"] - 0.5) < 1e-15);

  const auto same = d.coincide("same", "psi1", "S", "1", "D", "d0");
  CHECK(same.pass);
  const auto different = d.coincide("different", "psi1", "S", "1", "D", "d1");
  CHECK_FALSE(different.pass);
}

TEST_CASE("derivation: unequal weights fail the premise and prove nothing") {
  Derivation d;
  const std::vector<std::string> rec{"E"};
  d.add_state("psi1", "psi", wired(2.0 / 3.0, false), rec);
  d.add_state("psi2", "psi", wired(2.0 / 3.0, true), rec);
  const auto p = d.esp("swap", "psi1", "psi2", "A", "S");
  CHECK_FALSE(p.pass);
  CHECK(std::abs(p.max_deviation - 1.0 / 3.0) < 1e-12);
  CHECK_FALSE(d.equiprobable("psi"));
}

TEST_CASE("derivation bookkeeping errors") {
  Derivation d;
  const std::vector<std::string> rec{"E"};
  d.add_state("psi1", "psi", wired(0.5, false), rec);
  CHECK(code_of([&] { d.add_state("psi1", "psi", wired(0.5, true), rec); }) == ErrorCode::LabelCollision);
  CHECK(code_of([&] { (void)d.esp("x", "psi1", "nope", "A", "S"); }) == ErrorCode::LabelMissing);
}
