#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace contractnet {

enum class ErrorCode {
  NumericalFailure,
  NotPositiveDefinite,
  SingularBlock,
  DimensionMismatch,
  InvalidRate,
  InfeasibleAtAllRates,
  ReCheckFailed,
  SingularMatrix,
  SingularP,
  SingularA,
  DegenerateRate,
  AlphaOutOfRange,
  NoRealRoot,
  RankDeficient,
  SlopeBoundViolated,
  NotFound,
  NoConvergence,
  NonFiniteState,
  DegenerateTraces,
  InvalidArgument,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorCode::SingularBlock: return "SingularBlock";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidRate: return "InvalidRate";
    case ErrorCode::InfeasibleAtAllRates: return "InfeasibleAtAllRates";
    case ErrorCode::ReCheckFailed: return "ReCheckFailed";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::SingularP: return "SingularP";
    case ErrorCode::SingularA: return "SingularA";
    case ErrorCode::DegenerateRate: return "DegenerateRate";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::NoRealRoot: return "NoRealRoot";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::SlopeBoundViolated: return "SlopeBoundViolated";
    case ErrorCode::NotFound: return "NotFound";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::NonFiniteState: return "NonFiniteState";
    case ErrorCode::DegenerateTraces: return "DegenerateTraces";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable code. Every failure raised by the
/// library is one of these.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool ok, ErrorCode code, const std::string& what) {
  if (!ok) fail(code, what);
}

}  // namespace contractnet
