#pragma once

#include <stdexcept>

namespace scftpl {

/// Raised when a numerical routine cannot reach its accuracy target
/// (non-convergent quadrature, near-singular covariance, ...).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Configuration or input validation failure, reported by the CLI with exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scftpl
