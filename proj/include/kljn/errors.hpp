#pragma once

#include <stdexcept>
#include <string>

namespace kljn {

// Invalid configuration or spec (bad sample rate, bad counts, ...).
class ConfigurationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of a formula (non-positive resistance, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

// Shape mismatch between inputs (lengths, sample rates).
class ArgumentError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A resistor quadruple for which the mean-square solution is not physical.
class UnphysicalSolution : public std::runtime_error {
public:
    UnphysicalSolution(std::string branch, const std::string& what)
        : std::runtime_error(what), branch_(std::move(branch)) {}

    // Branch label ("HA", "HB", "LB") or empty when the denominator is singular.
    const std::string& branch() const noexcept { return branch_; }

private:
    std::string branch_;
};

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace kljn
