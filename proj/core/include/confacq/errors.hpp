#pragma once

#include <stdexcept>
#include <string>

namespace confacq {

// Invalid configuration, detected before any compute. CLI maps this to exit 2.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed input data (parse failures, invariant violations in loaded tables).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A model failed to fit (empty treatment arm, factorization failure, ...).
struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace confacq
