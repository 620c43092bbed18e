#pragma once

#include <stdexcept>
#include <string>

namespace mea {

// Error categories map onto CLI exit codes: validation 1, numeric/runtime 2,
// I/O 3.

/// Input violates a documented precondition or domain invariant.
class validation_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Coordinate or window outside the recorded/addressable range.
class bounds_error : public validation_error {
public:
    using validation_error::validation_error;
};

/// Numerical failure (non-convergence, non-finite values).
class numeric_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class io_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mea
