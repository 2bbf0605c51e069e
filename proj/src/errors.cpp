#include "compolab/errors.hpp"

namespace compolab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::NonScalarBlocks: return "NonScalarBlocks";
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::SingularJumpSystem: return "SingularJumpSystem";
    case ErrorKind::SingularContrast: return "SingularContrast";
    case ErrorKind::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorKind::ContrastTooHigh: return "ContrastTooHigh";
    case ErrorKind::BranchCut: return "BranchCut";
    case ErrorKind::WrongHalfPlane: return "WrongHalfPlane";
    case ErrorKind::NotOrthogonal: return "NotOrthogonal";
    case ErrorKind::DegenerateInput: return "DegenerateInput";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::Internal: return "Internal";
  }
  return "Unknown";
}

ErrorClass classify(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidInput:
    case ErrorKind::Parse:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::NonScalarBlocks:
    case ErrorKind::NotOrthogonal:
    case ErrorKind::ResolutionTooCoarse:
    case ErrorKind::ContrastTooHigh:
    case ErrorKind::BranchCut:
    case ErrorKind::WrongHalfPlane:
    case ErrorKind::DegenerateInput:
      return ErrorClass::Input;
    case ErrorKind::NotPositiveDefinite:
    case ErrorKind::SingularMatrix:
    case ErrorKind::SingularJumpSystem:
    case ErrorKind::SingularContrast:
    case ErrorKind::NoConvergence:
      return ErrorClass::Numerical;
    case ErrorKind::Internal:
      return ErrorClass::Internal;
  }
  return ErrorClass::Internal;
}

Error::Error(ErrorKind kind, const std::string& what)
    : std::runtime_error(std::string(to_string(kind)) + ": " + what),
      kind_(kind) {}

void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace compolab
