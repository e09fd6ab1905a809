#pragma once

#include <stdexcept>
#include <string>

namespace toptdes {

/// Raised when caller-supplied parameters violate a precondition.
/// The CLI maps this to exit code 2.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when a numerical procedure cannot deliver a valid result
/// (an undefined certificate, a solver that never certified). Exit code 1.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace toptdes
