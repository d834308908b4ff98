#pragma once

#include <stdexcept>
#include <string>

namespace pnn {

/// Bad input data or configuration: malformed files, out-of-range
/// parameters, inconsistent genome/topology combinations.
struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A computation that started from valid inputs failed numerically:
/// divergent training that exhausted its retries, non-finite state
/// where a finite result is required.
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace pnn
