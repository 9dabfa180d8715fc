#pragma once

#include <stdexcept>
#include <string>

namespace apkit {

/// Precondition violation on caller-supplied data (bad parameter, mismatched
/// groups, non-prime modulus where one is required, ...).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An exact computation would exceed the caller's multiply-accumulate budget
/// or a table would exceed the memory budget. Callers should fall back to a
/// sampled estimator.
class BudgetExceeded : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Integer arithmetic would leave the 64-bit range.
class RangeOverflow : public std::overflow_error {
 public:
  using std::overflow_error::overflow_error;
};

}  // namespace apkit
