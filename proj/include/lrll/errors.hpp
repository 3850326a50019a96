#pragma once

#include <stdexcept>
#include <string>

namespace lrll {

// Base of every error raised by the library. The CLI maps InputError (and
// its subclasses) to exit code 1 and NumericalError to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InputError : public Error {
 public:
  using Error::Error;
};

// Effective rank exceeds the requested rank.
class RankError : public InputError {
 public:
  using InputError::InputError;
};

// Scalar parameter outside the domain of a formula.
class DomainError : public InputError {
 public:
  using InputError::InputError;
};

class NumericalError : public Error {
 public:
  using Error::Error;
};

// Dense assembly would exceed the size guard.
class CapacityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// A counterexample constructor hit a degenerate configuration.
class ConstructionError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

}  // namespace lrll
