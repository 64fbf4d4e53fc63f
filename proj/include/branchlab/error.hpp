#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace branchlab {

enum class ErrorCode {
  LabelCollision,
  LabelMissing,
  NotUnitary,
  EmptyKeepSet,
  NotNormalized,
  DimensionTooSmall,
  DimensionTooLarge,
  NotReady,
  NoRecord,
  NotDecohered,
  IncompleteWiring,
  NoCopies,
  ApproximationFailed,
  WeightMismatch,
  NotEnvironmentOnly,
  PremiseFailed,
  NoSupport,
  NotSwappable,
  ParseError,
  LinkError,
  EventError,
  UnknownScenario,
  PartitionMismatch,
  ZeroEvidence,
  InvalidDensity,
  InvalidArgument,
  UndecidableHypothesis,
  AmbiguousEvidence,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above; the
// message holds the specifics (label names, offending magnitudes, paths).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace branchlab
