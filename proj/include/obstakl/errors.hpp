#pragma once

#include <stdexcept>
#include <string>

namespace obstakl {

// Malformed configuration, command line, or input file.
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// An iterative solve ran out of iterations or detected cycling.
struct NonConvergenceError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Inconsistent mesh, basis, or problem data.
struct InvalidInputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace obstakl
