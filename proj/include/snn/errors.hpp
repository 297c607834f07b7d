#pragma once

#include <stdexcept>
#include <string>

namespace snn {

/// Invalid configuration or parameter values (bad input, not a solver failure).
class config_error : public std::invalid_argument {
public:
    explicit config_error(const std::string& msg) : std::invalid_argument(msg) {}
};

/// Numerical failure at runtime: solver divergence, probability overflow,
/// non-finite state, time-step underflow.
class numerical_error : public std::runtime_error {
public:
    explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Filesystem / serialization failure.
class io_error : public std::runtime_error {
public:
    explicit io_error(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace snn
