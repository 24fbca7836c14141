#pragma once

#include <stdexcept>
#include <string>

namespace chemocal {

/// Base of every exception thrown by the library. `kind()` is a short
/// machine-readable tag used by the command line front end.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept { return "error"; }
};

/// A documented precondition of an operation does not hold.
class PreconditionError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "precondition"; }
};

/// Input is well formed but numerically degenerate (zero variance, singular fit, ...).
class DegenerateError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "degenerate"; }
};

/// Malformed file content. Carries file/line context in the message.
class FormatError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "format"; }
};

class IoError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "io"; }
};

/// Correction parameters derived from the test split.
class LeakageError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "leakage"; }
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
  const char* kind() const noexcept override { return "convergence"; }
};

}  // namespace chemocal
