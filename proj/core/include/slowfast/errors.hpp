#pragma once

#include <stdexcept>
#include <string>

namespace slowfast {

enum class ErrorKind {
  Config,
  ProjectionFailure,
  StepResolution,
  RejectionOverflow,
  DegenerateCriticalPoint,
  CurveEscape,
  AmbiguousSeparatrix,
  NonGenericLevels,
  EdgeRange,
  ExtrapolationDivergence,
  SignViolation,
  Stall,
  DivergentIntegral,
  StepTooLarge,
  TrappedInWell,
  VanishingPsi,
  BisectionAmbiguity,
  Timeout,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace slowfast
