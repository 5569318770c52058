#pragma once

#include <stdexcept>
#include <string>

namespace macrostate {

/// Base of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Input violates a documented invariant (non-Hermitian matrix, bad schedule, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Targets lie outside the set of expectations reachable by any density operator.
class NonRealizableError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// A computed quantity failed an internal consistency check.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Failure inside a time-stepping pipeline, tagged with the time at which it happened.
class PipelineError : public Error {
 public:
  PipelineError(const std::string& what, double time)
      : Error(what + " (t = " + std::to_string(time) + ")"), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

}  // namespace macrostate
