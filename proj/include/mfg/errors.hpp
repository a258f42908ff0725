#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace mfg {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Array shapes that do not match their grid.
class DimensionError : public Error {
public:
    using Error::Error;
};

// Model coefficients outside their admissible range (H <= 0, Q <= 0, ...).
class ParameterError : public Error {
public:
    using Error::Error;
};

// Argument outside the mathematical domain of a function (e.g. z1 + z2 = 0 for the energy split).
class DomainError : public Error {
public:
    using Error::Error;
};

// Bad input data: unnormalized initial density, malformed tables.
class InputError : public Error {
public:
    using Error::Error;
};

// A sweep produced NaN/Inf or a density far below zero.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& what, int time_node)
        : Error(what + " (time node " + std::to_string(time_node) + ")"), node_(time_node) {}

    // Same failure, tagged with the fixed-point iteration it happened in.
    DivergenceError(const DivergenceError& inner, int iteration)
        : Error("iteration " + std::to_string(iteration) + ": " + inner.what()),
          node_(inner.node_),
          iteration_(iteration) {}

    int time_node() const noexcept { return node_; }
    int iteration() const noexcept { return iteration_; }  // -1 outside the fixed-point loop

private:
    int node_;
    int iteration_ = -1;
};

// Scenario validation failure; `field()` is the dotted path of the offending key.
class ValidationError : public Error {
public:
    ValidationError(std::string field, const std::string& message)
        : Error(field + ": " + message), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

}  // namespace mfg
