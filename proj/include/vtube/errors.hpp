#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vtube {

enum class ErrorCode {
  DegenerateTube,
  AmbiguousRegion,
  InvalidInterval,
  NonpositiveInput,
  LogDomainViolation,
  OutsideTube,
  DegenerateBlend,
  CoincidentAgents,
  DirL2Violation,
  ObstacleOutsideTube,
  ObstacleOnBoundary,
  TriangleExceedsTube,
  OverlappingTriangles,
  NoFeasibleCorridor,
  Assumption3PrimeViolation,
  OutsideParentTube,
  UnsupportedVariant,
  SyntaxError,
  SchemaError,
  ValidationError,
  SafetyAbort,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateTube: return "DegenerateTube";
    case ErrorCode::AmbiguousRegion: return "AmbiguousRegion";
    case ErrorCode::InvalidInterval: return "InvalidInterval";
    case ErrorCode::NonpositiveInput: return "NonpositiveInput";
    case ErrorCode::LogDomainViolation: return "LogDomainViolation";
    case ErrorCode::OutsideTube: return "OutsideTube";
    case ErrorCode::DegenerateBlend: return "DegenerateBlend";
    case ErrorCode::CoincidentAgents: return "CoincidentAgents";
    case ErrorCode::DirL2Violation: return "DirL2Violation";
    case ErrorCode::ObstacleOutsideTube: return "ObstacleOutsideTube";
    case ErrorCode::ObstacleOnBoundary: return "ObstacleOnBoundary";
    case ErrorCode::TriangleExceedsTube: return "TriangleExceedsTube";
    case ErrorCode::OverlappingTriangles: return "OverlappingTriangles";
    case ErrorCode::NoFeasibleCorridor: return "NoFeasibleCorridor";
    case ErrorCode::Assumption3PrimeViolation: return "Assumption3PrimeViolation";
    case ErrorCode::OutsideParentTube: return "OutsideParentTube";
    case ErrorCode::UnsupportedVariant: return "UnsupportedVariant";
    case ErrorCode::SyntaxError: return "SyntaxError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::ValidationError: return "ValidationError";
    case ErrorCode::SafetyAbort: return "SafetyAbort";
  }
  return "Unknown";
}

/// Single exception type for the library; the code identifies the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  [[nodiscard]] ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vtube
