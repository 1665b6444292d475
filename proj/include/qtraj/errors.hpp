#pragma once

#include <stdexcept>
#include <string>

namespace qtraj {

/// Base class of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation outside the domain of a potential or basis (e.g. at an infinite-well wall).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A precondition on arguments was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// A numerical procedure failed (step underflow, differentiation failure, turning point).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace qtraj
