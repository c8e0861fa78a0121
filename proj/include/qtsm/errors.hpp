#pragma once

#include <stdexcept>
#include <string>

namespace qtsm {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Matrix/vector shapes that do not fit together.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Argument outside the domain an operation is defined on (t > T, tau < 0, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Numerical breakdown: ill-conditioned solve, overflow, non-finite state.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace qtsm
