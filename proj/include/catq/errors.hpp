#pragma once

#include <stdexcept>
#include <string>

namespace catq {

// Bad or inconsistent model input. CLI exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Ergodicity check failed. CLI exit code 3.
struct UnstableError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Solver did not converge or hit a resource cap. CLI exit code 4.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace catq
