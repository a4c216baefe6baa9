#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace nacifs {

enum class ErrorKind {
  Config,
  InvalidWord,
  OutOfRange,
  InsufficientDepth,
  IncompatibleSystems,
  InvalidSystem,
  WalkerStalled,
  DegenerateFactor,
  NonMeasure,
  DomainError,
  PerturbationInfeasible,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Every failure raised by the library carries one of the kinds above so that
/// front-ends can map it to an exit status without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace nacifs
