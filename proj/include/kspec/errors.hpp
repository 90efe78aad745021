#pragma once

#include <stdexcept>
#include <string>

namespace kspec {

// Bad argument or configuration supplied by the caller.
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A numerical routine failed to reach its accuracy target.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Hankel moment matrix too ill-conditioned for Gram-Schmidt.
class DegenerateMomentsError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Quadrature did not converge; carries the tolerance that was reached.
class QuadratureError : public NumericalError {
 public:
  QuadratureError(const std::string& what, double achieved)
      : NumericalError(what), achieved_(achieved) {}
  double achieved_tolerance() const noexcept { return achieved_; }

 private:
  double achieved_;
};

// Memory or size ceiling exceeded.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kspec
