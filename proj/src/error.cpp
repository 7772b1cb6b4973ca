#include "outreg/error.hpp"

namespace outreg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFiniteEntry: return "NonFiniteEntry";
    case ErrorCode::kInvalidWeights: return "InvalidWeights";
    case ErrorCode::kPreconditionViolated: return "PreconditionViolated";
    case ErrorCode::kNotSemisimple: return "NotSemisimple";
    case ErrorCode::kSpectrumViolation: return "SpectrumViolation";
    case ErrorCode::kNotDetectable: return "NotDetectable";
    case ErrorCode::kNotStabilizable: return "NotStabilizable";
    case ErrorCode::kNotStabilizing: return "NotStabilizing";
    case ErrorCode::kImaginaryAxisEigenvalues: return "ImaginaryAxisEigenvalues";
    case ErrorCode::kInfeasibleVariation: return "InfeasibleVariation";
    case ErrorCode::kProbeFailed: return "ProbeFailed";
    case ErrorCode::kStepTooLarge: return "StepTooLarge";
    case ErrorCode::kInconsistent: return "Inconsistent";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kIoError: return "IoError";
  }
  return "Unknown";
}

}  // namespace outreg
