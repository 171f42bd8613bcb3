#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace sentinel {

enum class ErrorCode {
  EmptySampleSet,
  DimensionMismatch,
  NotSymmetric,
  IndefiniteMatrix,
  NumericFailure,
  ClassTooSmall,
  LabelOutOfRange,
  IoFailure,
  FormatVersionMismatch,
  ChecksumMismatch,
  SeedPoolTooSmall,
  WindowTooSmall,
  UnknownClassId,
  NotADistribution,
  EmptyStream,
  SeparationInfeasible,
  InvalidSubset,
  PremiseViolated,
  MissingClass,
  InvalidArgument,
};

std::string_view error_name(ErrorCode code) noexcept;

/// Numeric failures (exit code 3) vs. data errors (exit code 2).
bool is_numeric(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail);

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace sentinel
