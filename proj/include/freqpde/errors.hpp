#pragma once

#include <stdexcept>
#include <string>

namespace freqpde {

/// Shape or wiring mismatch between tensors / modules. CLI exit code 1.
class ShapeError : public std::invalid_argument {
public:
    explicit ShapeError(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Bad file, config, or argument content. CLI exit code 1.
class ValidationError : public std::runtime_error {
public:
    explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Numerically degenerate input (zero variance, non-positive depth, ...).
/// CLI exit code 2.
class DegenerateInputError : public std::runtime_error {
public:
    explicit DegenerateInputError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace freqpde
