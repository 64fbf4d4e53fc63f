#pragma once

// Subcommands behind the branchlab executable. Each prints a human table to
// `out`, diagnostics to `err`, and returns the process exit code:
// 0 success, 1 verification or rule failure, 2 input error.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "branchlab/error.hpp"

namespace branchlab::cli {

inline constexpr int kOk = 0;
inline constexpr int kFailure = 1;
inline constexpr int kInputError = 2;

/// kInputError for parse, link, lookup and argument errors; kFailure otherwise.
int exit_code(ErrorCode c) noexcept;

struct RunArgs {
  std::string scenario;  ///< path or builtin:<name>
  std::string rule = "born";
  std::optional<int> at;  ///< default: last event tick
  std::string out;        ///< report document path
  std::string csv;        ///< posterior trajectory, when the scenario has a confirmation section
};

struct VerifyArgs {
  std::string suite;
  std::uint64_t trials = 100;
  std::uint64_t seed = 0;
  std::uint64_t start = 0;
  std::string out;
};

struct BookArgs {
  std::string scenario;
  std::string book;  ///< empty: the scenario's own bets
  std::string rule = "indifference";
  std::string out;
};

struct MeasureArgs {
  std::string config;
  std::string csv;
  std::string out;
};

int cmd_run(const RunArgs& a, std::ostream& out, std::ostream& err);
int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err);
int cmd_dutchbook(const BookArgs& a, std::ostream& out, std::ostream& err);
int cmd_measure(const MeasureArgs& a, std::ostream& out, std::ostream& err);

}  // namespace branchlab::cli
