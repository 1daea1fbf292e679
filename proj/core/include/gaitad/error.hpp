#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gaitad {

enum class ErrorCode {
  kInsufficientData,
  kInvalidTimestamps,
  kInvalidCutoff,
  kAlignmentFailure,
  kDegenerateInput,
  kEstimationFailure,
  kAmbiguousDecomposition,
  kNoGaitDetected,
  kDegenerateChannel,
  kNumericalDivergence,
  kShapeError,
  kDegenerateDataset,
  kConvergenceFailure,
  kPipelineFailure,
  kInvalidArgument,
  kIoError,
  kFormatError,
};

/// Stable identifier used in machine-readable error output, e.g. "NoGaitDetected".
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace gaitad
