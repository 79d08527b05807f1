#include "uib/error.h"

namespace uib {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kInvalidDistribution: return "InvalidDistribution";
    case ErrorCode::kDivergence: return "Divergence";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kEmptyPattern: return "EmptyPattern";
    case ErrorCode::kIndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedPayload: return "TruncatedPayload";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidIndexSets: return "InvalidIndexSets";
    case ErrorCode::kDivisionByZero: return "DivisionByZero";
    case ErrorCode::kEmptyForgetSet: return "EmptyForgetSet";
    case ErrorCode::kParseError: return "ParseError";
    case ErrorCode::kValidationError: return "ValidationError";
    case ErrorCode::kIo: return "Io";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code) {}

}  // namespace uib
