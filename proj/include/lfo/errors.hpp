#pragma once

#include <stdexcept>

namespace lfo {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad input: malformed files, unknown keys, out-of-range values.
struct ConfigError : Error {
  using Error::Error;
};

// Solver breakdown: divergence, singular systems, non-finite state.
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace lfo
