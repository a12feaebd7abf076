#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace fiml {

/// Base class for everything this library throws on purpose.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Invalid or inconsistent configuration (bad value, unknown key, grid too coarse).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Malformed input file; message carries the source name and line number.
class ParseError : public Error {
public:
    using Error::Error;
};

/// Iterative process failed to reach its tolerance or produced non-finite values.
/// Carries the residual history up to the failure so callers can report it.
class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& msg, std::vector<double> history = {})
        : Error(msg), residual_history(std::move(history)) {}
    std::vector<double> residual_history;
};

/// Linear algebra failure or degenerate state (singular matrix, zero bulk velocity).
class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace fiml
