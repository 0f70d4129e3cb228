#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ddc {

enum class ErrorCode {
  kNonSquare,
  kNegativeWeight,
  kNonZeroDiagonal,
  kLeaderHasInEdges,
  kEigenFailure,
  kHorizonTooShort,
  kDimensionMismatch,
  kInvalidArgument,
  kInfeasible,
  kNumericalFailure,
  kRankDeficient,
  kSubdominantModulusNotLessThanOne,
  kNoConvergence,
  kFNotPositiveDefinite,
  kNonPositiveSpectrum,
  kConfig,
  kIo,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; what() is the human message.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ddc
