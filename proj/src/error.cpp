#include "sentinel/error.hpp"

namespace sentinel {

std::string_view error_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::EmptySampleSet: return "EmptySampleSet";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::IndefiniteMatrix: return "IndefiniteMatrix";
    case ErrorCode::NumericFailure: return "NumericFailure";
    case ErrorCode::ClassTooSmall: return "ClassTooSmall";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::SeedPoolTooSmall: return "SeedPoolTooSmall";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::UnknownClassId: return "UnknownClassId";
    case ErrorCode::NotADistribution: return "NotADistribution";
    case ErrorCode::EmptyStream: return "EmptyStream";
    case ErrorCode::SeparationInfeasible: return "SeparationInfeasible";
    case ErrorCode::InvalidSubset: return "InvalidSubset";
    case ErrorCode::PremiseViolated: return "PremiseViolated";
    case ErrorCode::MissingClass: return "MissingClass";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

bool is_numeric(ErrorCode code) noexcept {
  return code == ErrorCode::NotSymmetric || code == ErrorCode::IndefiniteMatrix ||
         code == ErrorCode::NumericFailure;
}

Error::Error(ErrorCode code, const std::string& detail)
    : std::runtime_error(std::string(error_name(code)) + ": " + detail), code_(code) {}

}  // namespace sentinel
