#ifndef UIB_ERROR_H_
#define UIB_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace uib {

// Failure categories raised across the library. Each maps to one of the
// named error conditions of the operation that raised it.
enum class ErrorCode {
  kShapeMismatch,
  kNonFinite,
  kNonConvergence,
  kInvalidDistribution,
  kDivergence,
  kInvalidConfig,
  kEmptyPattern,
  kIndexOutOfRange,
  kBadMagic,
  kTruncatedPayload,
  kDimensionMismatch,
  kInvalidIndexSets,
  kDivisionByZero,
  kEmptyForgetSet,
  kParseError,
  kValidationError,
  kIo,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace uib

#endif  // UIB_ERROR_H_
