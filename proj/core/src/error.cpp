#include "gaitad/error.hpp"

namespace gaitad {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInsufficientData: return "InsufficientData";
    case ErrorCode::kInvalidTimestamps: return "InvalidTimestamps";
    case ErrorCode::kInvalidCutoff: return "InvalidCutoff";
    case ErrorCode::kAlignmentFailure: return "AlignmentFailure";
    case ErrorCode::kDegenerateInput: return "DegenerateInput";
    case ErrorCode::kEstimationFailure: return "EstimationFailure";
    case ErrorCode::kAmbiguousDecomposition: return "AmbiguousDecomposition";
    case ErrorCode::kNoGaitDetected: return "NoGaitDetected";
    case ErrorCode::kDegenerateChannel: return "DegenerateChannel";
    case ErrorCode::kNumericalDivergence: return "NumericalDivergence";
    case ErrorCode::kShapeError: return "ShapeError";
    case ErrorCode::kDegenerateDataset: return "DegenerateDataset";
    case ErrorCode::kConvergenceFailure: return "ConvergenceFailure";
    case ErrorCode::kPipelineFailure: return "PipelineFailure";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kFormatError: return "FormatError";
  }
  return "Unknown";
}

}  // namespace gaitad
