#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace hybridep {

enum class ErrorCode {
  DimensionMismatch,
  InfeasibleSet,
  DegenerateCut,
  EmptyIntersection,
  MaxInnerIterationsExceeded,
  UnknownConstants,
  NonFiniteObjective,
  ParameterViolation,
  InfeasibleCut,
  LinesearchFailed,
  ParseError,
  SchemaError,
  ConstantsMissing,
  OracleUnavailable,
  EmptyF,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InfeasibleSet: return "InfeasibleSet";
    case ErrorCode::DegenerateCut: return "DegenerateCut";
    case ErrorCode::EmptyIntersection: return "EmptyIntersection";
    case ErrorCode::MaxInnerIterationsExceeded: return "MaxInnerIterationsExceeded";
    case ErrorCode::UnknownConstants: return "UnknownConstants";
    case ErrorCode::NonFiniteObjective: return "NonFiniteObjective";
    case ErrorCode::ParameterViolation: return "ParameterViolation";
    case ErrorCode::InfeasibleCut: return "InfeasibleCut";
    case ErrorCode::LinesearchFailed: return "LinesearchFailed";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ConstantsMissing: return "ConstantsMissing";
    case ErrorCode::OracleUnavailable: return "OracleUnavailable";
    case ErrorCode::EmptyF: return "EmptyF";
  }
  return "Unknown";
}

/// Errors raised before any iteration runs (bad input, bad parameters).
inline bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::DimensionMismatch:
    case ErrorCode::UnknownConstants:
    case ErrorCode::ParameterViolation:
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::ConstantsMissing:
      return true;
    default:
      return false;
  }
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace hybridep
