#include "branchlab/error.hpp"

namespace branchlab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::LabelCollision: return "LabelCollision";
    case ErrorCode::LabelMissing: return "LabelMissing";
    case ErrorCode::NotUnitary: return "NotUnitary";
    case ErrorCode::EmptyKeepSet: return "EmptyKeepSet";
    case ErrorCode::NotNormalized: return "NotNormalized";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::DimensionTooLarge: return "DimensionTooLarge";
    case ErrorCode::NotReady: return "NotReady";
    case ErrorCode::NoRecord: return "NoRecord";
    case ErrorCode::NotDecohered: return "NotDecohered";
    case ErrorCode::IncompleteWiring: return "IncompleteWiring";
    case ErrorCode::NoCopies: return "NoCopies";
    case ErrorCode::ApproximationFailed: return "ApproximationFailed";
    case ErrorCode::WeightMismatch: return "WeightMismatch";
    case ErrorCode::NotEnvironmentOnly: return "NotEnvironmentOnly";
    case ErrorCode::PremiseFailed: return "PremiseFailed";
    case ErrorCode::NoSupport: return "NoSupport";
    case ErrorCode::NotSwappable: return "NotSwappable";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::LinkError: return "LinkError";
    case ErrorCode::EventError: return "EventError";
    case ErrorCode::UnknownScenario: return "UnknownScenario";
    case ErrorCode::PartitionMismatch: return "PartitionMismatch";
    case ErrorCode::ZeroEvidence: return "ZeroEvidence";
    case ErrorCode::InvalidDensity: return "InvalidDensity";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::UndecidableHypothesis: return "UndecidableHypothesis";
    case ErrorCode::AmbiguousEvidence: return "AmbiguousEvidence";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& what)
    : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

}  // namespace branchlab
