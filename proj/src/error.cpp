#include "ddc/error.hpp"

namespace ddc {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kNonSquare: return "NonSquare";
    case ErrorCode::kNegativeWeight: return "NegativeWeight";
    case ErrorCode::kNonZeroDiagonal: return "NonZeroDiagonal";
    case ErrorCode::kLeaderHasInEdges: return "LeaderHasInEdges";
    case ErrorCode::kEigenFailure: return "EigenFailure";
    case ErrorCode::kHorizonTooShort: return "HorizonTooShort";
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInfeasible: return "Infeasible";
    case ErrorCode::kNumericalFailure: return "NumericalFailure";
    case ErrorCode::kRankDeficient: return "RankDeficient";
    case ErrorCode::kSubdominantModulusNotLessThanOne:
      return "SubdominantModulusNotLessThanOne";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kFNotPositiveDefinite: return "FNotPositiveDefinite";
    case ErrorCode::kNonPositiveSpectrum: return "NonPositiveSpectrum";
    case ErrorCode::kConfig: return "ConfigError";
    case ErrorCode::kIo: return "IoError";
  }
  return "Unknown";
}

}  // namespace ddc
