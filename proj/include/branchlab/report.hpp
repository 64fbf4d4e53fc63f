#pragma once

// Machine-readable report documents. Every document carries "kind",
// "schema_version" and "tool_version"; parse(emit(r)) == r.

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "branchlab/cosmo.hpp"
#include "branchlab/epistemics.hpp"
#include "branchlab/scenario.hpp"
#include "branchlab/verify.hpp"

namespace branchlab {

inline constexpr int kSchemaVersion = 1;

std::string_view tool_version() noexcept;

struct BranchWeight {
  std::string label;
  double weight = 0.0;

  bool operator==(const BranchWeight&) const = default;
};

struct QueryReport {
  int time = 0;
  std::string observer;
  Predicate hypothesis;
  Rule rule = Rule::Born;
  double probability = 0.0;
  CredenceTable table;

  bool operator==(const QueryReport&) const = default;
};

struct RunReport {
  int schema_version = kSchemaVersion;
  std::string tool_version;
  std::string scenario;
  Rule rule = Rule::Born;
  int at = 0;
  std::uint64_t seed = 0;
  std::vector<QueryReport> queries;
  std::vector<BranchWeight> branches;  ///< world state at `at`
  std::optional<ConfirmationReport> confirmation;

  bool operator==(const RunReport&) const = default;
};

struct MeasureReport {
  int schema_version = kSchemaVersion;
  std::string tool_version;
  FamilyMeasures result;

  bool operator==(const MeasureReport&) const = default;
};

struct VerifyReport {
  int schema_version = kSchemaVersion;
  std::string tool_version;
  Suite suite = Suite::AppendixB;
  std::uint64_t seed = 0;
  std::uint64_t start = 0;
  std::vector<TrialResult> trials;
  bool pass = false;

  bool operator==(const VerifyReport&) const = default;
};

struct BookDocument {
  int schema_version = kSchemaVersion;
  std::string tool_version;
  BookReport report;

  bool operator==(const BookDocument&) const = default;
};

std::string emit(const RunReport& r);
std::string emit(const MeasureReport& r);
std::string emit(const VerifyReport& r);
std::string emit(const BookDocument& r);

/// ParseError on malformed documents or a schema_version this build does not read.
RunReport parse_run_report(std::string_view text);
MeasureReport parse_measure_report(std::string_view text);
VerifyReport parse_verify_report(std::string_view text);
BookDocument parse_book_report(std::string_view text);

}  // namespace branchlab
