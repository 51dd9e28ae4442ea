// Error types shared across the simulator.
//
// ConfigError covers bad user input (malformed config, out-of-range
// parameters); NumericError covers runtime failures of the math
// (disconnected graphs after retries, degenerate mixing, singular systems).
// The CLI maps ConfigError to exit code 2 and NumericError to exit code 3.
#pragma once

#include <stdexcept>
#include <string>

namespace sdgt {

class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

class NumericError : public std::runtime_error {
public:
    explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace sdgt
