#pragma once

#include <stdexcept>
#include <string>

namespace cns {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on an argument was violated (bad parameter, wrong grid, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Input data contains NaN or infinity.
class NonFiniteValue : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure could not produce a result (step rejection, solver
/// breakdown, bisection bracket failure).
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

/// A verified property or inequality failed. The CLI maps this to exit code 2.
class AssertionFailure : public Error {
 public:
  using Error::Error;
};

}  // namespace cns
