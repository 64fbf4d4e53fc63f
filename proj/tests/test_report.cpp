#include <limits>

#include "doctest.h"
#include "json.hpp"

#include "branchlab/error.hpp"
#include "branchlab/report.hpp"

using namespace branchlab;
using json = nlohmann::json;

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

RunReport sample_run() {
  RunReport r;
  r.tool_version = std::string(tool_version());
  r.scenario = "once_or_twice";
  r.rule = Rule::Indifference;
  r.at = 3;
  r.seed = 7;
  r.queries.push_back({3, "Alice", Predicate::record("D", "down"), Rule::Indifference, 1.0 / 3.0,
                       CredenceTable({{"a", 1.0 / 3.0}, {"b", 2.0 / 3.0}})});
  r.branches = {{"up,up", 0.25}, {"up,down", 0.25}, {"down,X", 0.5}};
  return r;
}

}  // namespace

TEST_CASE("run reports round-trip") {
  auto r = sample_run();
  CHECK(parse_run_report(emit(r)) == r);
  r.confirmation = confirm(builtin("what_wave_function"));
  CHECK(parse_run_report(emit(r)) == r);
  const auto j = json::parse(emit(r));
  CHECK(j.at("kind") == "run");
  CHECK(j.at("schema_version") == kSchemaVersion);
  CHECK(j.at("tool_version") == std::string(tool_version()));
}

TEST_CASE("measure reports round-trip, infinity included") {
  const std::vector<BranchHistory> hs{[] {
                                        BranchHistory h;
                                        h.name = "convergent";
                                        h.gamma = 1.0;
                                        h.omega = 1.0;
                                        return h;
                                      }(),
                                      [] {
                                        BranchHistory h;
                                        h.name = "runaway";
                                        h.gamma = 0.4;
                                        h.omega = 1.0;
                                        return h;
                                      }()};
  const MeasureReport r{kSchemaVersion, std::string(tool_version()), normalize_families(hs)};
  const auto text = emit(r);
  CHECK(text.find("\"inf\"") != std::string::npos);
  const auto back = parse_measure_report(text);
  CHECK(back == r);
  CHECK(back.result.measures[1].value == std::numeric_limits<double>::infinity());

  const std::vector<BranchHistory> ok{hs[0]};
  const MeasureReport finite{kSchemaVersion, std::string(tool_version()), normalize_families(ok)};
  CHECK(parse_measure_report(emit(finite)) == finite);
}

TEST_CASE("verify reports round-trip") {
  const auto s = run_suite(Suite::AppendixB, 3, 5, 0, false);
  const VerifyReport r{kSchemaVersion, std::string(tool_version()), s.suite, s.seed, s.start, s.trials, s.pass()};
  CHECK(parse_verify_report(emit(r)) == r);
}

TEST_CASE("book reports round-trip, unpriced bets included") {
  for (const Rule rule : {Rule::Indifference, Rule::Born}) {
    const auto sc = builtin("dr_evil_book");
    const BookDocument d{kSchemaVersion, std::string(tool_version()), dutch_book_check(sc, rule, sc.bets)};
    CHECK(parse_book_report(emit(d)) == d);
  }
}

TEST_CASE("malformed and foreign documents are rejected") {
  CHECK(code_of([] { (void)parse_run_report("{"); }) == ErrorCode::ParseError);
  auto j = json::parse(emit(sample_run()));
  j["schema_version"] = kSchemaVersion + 1;
  CHECK(code_of([&] { (void)parse_run_report(j.dump()); }) == ErrorCode::ParseError);
  j = json::parse(emit(sample_run()));
  j.erase("queries");
  CHECK(code_of([&] { (void)parse_run_report(j.dump()); }) == ErrorCode::ParseError);
  j = json::parse(emit(sample_run()));
  j["rule"] = "bayes";
  CHECK(code_of([&] { (void)parse_run_report(j.dump()); }) == ErrorCode::ParseError);
  CHECK(code_of([&] { (void)parse_measure_report(emit(sample_run())); }) == ErrorCode::ParseError);
}

TEST_CASE("suite names") {
  for (const Suite s : {Suite::AppendixB, Suite::AppendixC, Suite::Proofs, Suite::StrongEsp})
    CHECK(parse_suite(to_string(s)) == s);
  CHECK(code_of([] { (void)parse_suite("nope"); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("suites are reproducible trial by trial and independent of threading") {
  for (const Suite s : {Suite::AppendixB, Suite::AppendixC, Suite::Proofs, Suite::StrongEsp}) {
    const auto par = run_suite(s, 12, 99);
    const auto ser = run_suite(s, 12, 99, 0, false);
    CHECK(par.trials == ser.trials);
    CHECK(par.pass());
    const auto one = run_suite(s, 1, 99, 7);
    REQUIRE(one.trials.size() == 1);
    CHECK(one.trials[0] == par.trials[7]);
  }
  CHECK(code_of([] { (void)run_suite(Suite::Proofs, 0, 1); }) == ErrorCode::InvalidArgument);
}
