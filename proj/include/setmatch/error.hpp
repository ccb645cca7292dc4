#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace setmatch {

enum class ErrorCode {
  ZeroVector,
  DimMismatch,
  IoFailure,
  BadMagic,
  UnsupportedVersion,
  UnsupportedDtype,
  TruncatedPayload,
  TrailingData,
  CountMismatch,
  MalformedManifest,
  NormViolation,
  InvalidArgument,
  NonFiniteCost,
  Degenerate,
  TooLarge,
  NonUniformMarginals,
  InfeasibleAspect,
  EmptyClassList,
  EmptyDescriptorSet,
  EmptyInput,
  MissingPromptSet,
  KeyMismatch,
  EmptySuite,
  NoHybrids,
  MissingCrossHybrids,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::UnsupportedVersion: return "UnsupportedVersion";
    case ErrorCode::UnsupportedDtype: return "UnsupportedDtype";
    case ErrorCode::TruncatedPayload: return "TruncatedPayload";
    case ErrorCode::TrailingData: return "TrailingData";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::MalformedManifest: return "MalformedManifest";
    case ErrorCode::NormViolation: return "NormViolation";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteCost: return "NonFiniteCost";
    case ErrorCode::Degenerate: return "Degenerate";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NonUniformMarginals: return "NonUniformMarginals";
    case ErrorCode::InfeasibleAspect: return "InfeasibleAspect";
    case ErrorCode::EmptyClassList: return "EmptyClassList";
    case ErrorCode::EmptyDescriptorSet: return "EmptyDescriptorSet";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::MissingPromptSet: return "MissingPromptSet";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::EmptySuite: return "EmptySuite";
    case ErrorCode::NoHybrids: return "NoHybrids";
    case ErrorCode::MissingCrossHybrids: return "MissingCrossHybrids";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one ErrorCode so callers can
/// branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace setmatch
