#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace refgov {

enum class ErrorCode {
  kDimensionMismatch,
  kNonFinite,
  kSingularMatrix,
  kNoConvergence,
  kNotStabilizable,
  kOutsideAdmissibleSet,
  kCertificationFailed,
  kNotContractive,
  kNotAffine,
  kMaxIterations,
  kTooLarge,
  kInvalidArgument,
  kConfig,
};

std::string_view to_string(ErrorCode code);

/// Exception carrying a machine-readable code; the CLI maps codes to exit
/// statuses.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDimensionMismatch: return "DimensionMismatch";
    case ErrorCode::kNonFinite: return "NonFinite";
    case ErrorCode::kSingularMatrix: return "SingularMatrix";
    case ErrorCode::kNoConvergence: return "NoConvergence";
    case ErrorCode::kNotStabilizable: return "NotStabilizable";
    case ErrorCode::kOutsideAdmissibleSet: return "OutsideAdmissibleSet";
    case ErrorCode::kCertificationFailed: return "CertificationFailed";
    case ErrorCode::kNotContractive: return "NotContractive";
    case ErrorCode::kNotAffine: return "NotAffine";
    case ErrorCode::kMaxIterations: return "MaxIterations";
    case ErrorCode::kTooLarge: return "TooLarge";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfig: return "ConfigError";
  }
  return "Unknown";
}

}  // namespace refgov
