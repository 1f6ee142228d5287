#include "lssid/error.hpp"

namespace lssid {

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidMode: return "invalid-mode";
    case ErrorCode::InvalidProbability: return "invalid-probability";
    case ErrorCode::InvalidModel: return "invalid-model";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::DimensionMismatch: return "dimension-mismatch";
    case ErrorCode::MissingMarkovParameter: return "missing-markov-parameter";
    case ErrorCode::SingularHankel: return "singular-hankel";
    case ErrorCode::SingularMatrix: return "singular-matrix";
    case ErrorCode::NonConvergence: return "non-convergence";
    case ErrorCode::NotFullRank: return "not-full-rank";
    case ErrorCode::NoSelectionFound: return "no-selection-found";
    case ErrorCode::IllConditionedRegressor: return "ill-conditioned-regressor";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::UndefinedBfr: return "undefined-bfr";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

void rethrow_with_stage(const Error& e, const std::string& stage) {
  throw Error(e.code(), "[" + stage + "] " + e.what());
}

}  // namespace lssid
