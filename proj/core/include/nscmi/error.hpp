#pragma once

#include <stdexcept>
#include <string>

namespace nscmi {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, out-of-range parameters, violated preconditions.
// The CLI maps these to exit code 1.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// A computation that could not produce a trustworthy number (exit code 2).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Conditioning on an event of probability zero.
class ZeroMassError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Iterative solver gave up; carries the last residual it saw.
class ConvergenceError : public NumericalError {
 public:
  ConvergenceError(const std::string& what, double residual)
      : NumericalError(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

}  // namespace nscmi
