#pragma once

#include <stdexcept>
#include <string>

namespace ssid {

enum class ErrorKind {
  InvalidArgument,
  InvalidModel,
  NonConvergence,
  NotDetectable,
  EigenFailure,
  CholeskyFailure,
  InsufficientSamples,
  PersistenceFailure,
  PinvFailure,
  SvdFailure,
  NotDominated,
  RobustnessViolated,
  ScanLimit,
  DimensionMismatch,
  MissingDiagnostics,
  SingularGram,
  ConfigError,
  IoError,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace ssid
