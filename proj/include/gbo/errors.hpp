#pragma once

#include <stdexcept>
#include <string>

namespace gbo {

// Bad input to a library call (violated precondition).
struct InvalidArgument : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Malformed or out-of-range experiment configuration; the message names the key.
struct ConfigError : InvalidArgument {
    using InvalidArgument::InvalidArgument;
};

// Blow-up, wrap-around, non-monotone characteristics and similar run-time failures.
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

inline void require(bool ok, const std::string& what) {
    if (!ok) throw InvalidArgument(what);
}

} // namespace gbo
