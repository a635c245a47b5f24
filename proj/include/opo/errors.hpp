#pragma once

#include <stdexcept>
#include <string>

namespace opo {

/// Invalid configuration or malformed input (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Numerical failure: divergence, non-convergence (CLI exit code 3).
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A metric whose defining ratio is degenerate for the given inputs.
struct UndefinedMetricError : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace opo
