#pragma once

#include <stdexcept>
#include <string>

namespace qnet {

enum class ErrorCode {
  CycleError,
  DegreeError,
  RateRangeError,
  NotBipartite,
  NotCompleteBipartite,
  PathExplosion,
  NoStrictSlack,
  NotSubstochastic,
  TooManyQueues,
  TooLarge,
  EmptySet,
  WindowOutOfRange,
  AdversaryViolation,
  ConfigError,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::CycleError: return "CycleError";
    case ErrorCode::DegreeError: return "DegreeError";
    case ErrorCode::RateRangeError: return "RateRangeError";
    case ErrorCode::NotBipartite: return "NotBipartite";
    case ErrorCode::NotCompleteBipartite: return "NotCompleteBipartite";
    case ErrorCode::PathExplosion: return "PathExplosion";
    case ErrorCode::NoStrictSlack: return "NoStrictSlack";
    case ErrorCode::NotSubstochastic: return "NotSubstochastic";
    case ErrorCode::TooManyQueues: return "TooManyQueues";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::EmptySet: return "EmptySet";
    case ErrorCode::WindowOutOfRange: return "WindowOutOfRange";
    case ErrorCode::AdversaryViolation: return "AdversaryViolation";
    case ErrorCode::ConfigError: return "ConfigError";
  }
  return "UnknownError";
}

// All library failures carry a code so callers (and tests) can branch on the
// kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace qnet
