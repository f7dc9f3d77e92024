#pragma once

#include <stdexcept>
#include <string>

namespace chainflux {

// Configuration / argument validation failure (CLI exit code 2).
struct config_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A numerical guard tripped: renormalization scale past its ceiling,
// non-convergent quadrature tail, non-finite SDE state (CLI exit code 3).
struct numeric_guard_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// sin(pi X_l) vanished exactly along a trajectory while the exact amplitude
// product was being accumulated. Probability-zero event; never patched.
struct degenerate_sine_error : numeric_guard_error {
    using numeric_guard_error::numeric_guard_error;
};

} // namespace chainflux
