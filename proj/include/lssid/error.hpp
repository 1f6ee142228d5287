#pragma once

#include <stdexcept>
#include <string>

namespace lssid {

enum class ErrorCode {
  InvalidMode,
  InvalidProbability,
  InvalidModel,
  InvalidArgument,
  DimensionMismatch,
  MissingMarkovParameter,
  SingularHankel,
  SingularMatrix,
  NonConvergence,
  NotFullRank,
  NoSelectionFound,
  IllConditionedRegressor,
  InsufficientData,
  UndefinedBfr,
  Io,
};

const char* to_string(ErrorCode code) noexcept;

/// Exception type used throughout the library. The code lets front ends map
/// failures onto exit statuses without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

/// Prefixes the message of `e` with a pipeline stage tag, keeping the code.
[[noreturn]] void rethrow_with_stage(const Error& e, const std::string& stage);

}  // namespace lssid
