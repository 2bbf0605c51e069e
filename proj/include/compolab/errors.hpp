#pragma once

#include <stdexcept>
#include <string>

namespace compolab {

enum class ErrorKind {
  InvalidInput,
  Parse,
  DimensionMismatch,
  NonScalarBlocks,
  NotPositiveDefinite,
  SingularMatrix,
  SingularJumpSystem,
  SingularContrast,
  ResolutionTooCoarse,
  ContrastTooHigh,
  BranchCut,
  WrongHalfPlane,
  NotOrthogonal,
  DegenerateInput,
  NoConvergence,
  Internal,
};

const char* to_string(ErrorKind kind);

/// Broad class of a failure, used by the command line front end to pick an
/// exit code.
enum class ErrorClass { Input, Numerical, Internal };

ErrorClass classify(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what);

}  // namespace compolab
