#pragma once

#include <stdexcept>
#include <string>

namespace nonnormal {

/// Base class for every failure raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid argument shapes, dimensions or configuration values.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// An iterative method hit its iteration cap or a series diverged.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

/// Non-finite values appeared in network activations or parameters.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long step)
      : Error(what), step_(step) {}

  /// Time step (forward pass) or optimizer step at which it happened; -1 if unknown.
  long step() const noexcept { return step_; }

 private:
  long step_;
};

/// Missing, truncated or malformed input files.
class DataError : public Error {
 public:
  using Error::Error;
};

}  // namespace nonnormal
