#include "slowfast/errors.hpp"

namespace slowfast {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Config: return "config";
    case ErrorKind::ProjectionFailure: return "projection-failure";
    case ErrorKind::StepResolution: return "step-resolution";
    case ErrorKind::RejectionOverflow: return "rejection-overflow";
    case ErrorKind::DegenerateCriticalPoint: return "degenerate-critical-point";
    case ErrorKind::CurveEscape: return "curve-escape";
    case ErrorKind::AmbiguousSeparatrix: return "ambiguous-separatrix";
    case ErrorKind::NonGenericLevels: return "non-generic-levels";
    case ErrorKind::EdgeRange: return "edge-range";
    case ErrorKind::ExtrapolationDivergence: return "extrapolation-divergence";
    case ErrorKind::SignViolation: return "sign-violation";
    case ErrorKind::Stall: return "stall";
    case ErrorKind::DivergentIntegral: return "divergent-integral";
    case ErrorKind::StepTooLarge: return "step-too-large";
    case ErrorKind::TrappedInWell: return "trapped-in-well";
    case ErrorKind::VanishingPsi: return "vanishing-psi";
    case ErrorKind::BisectionAmbiguity: return "bisection-ambiguity";
    case ErrorKind::Timeout: return "timeout";
  }
  return "unknown";
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

}  // namespace slowfast
