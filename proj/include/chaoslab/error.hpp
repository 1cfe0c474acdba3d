#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace chaoslab {

// A precondition on a parameter or input was violated.
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// A simulation produced a non-finite or out-of-range value.
class NumericError : public std::runtime_error {
public:
    NumericError(const std::string& what, std::size_t step)
        : std::runtime_error(what + " (step " + std::to_string(step) + ")"), step_(step) {}

    std::size_t step() const noexcept { return step_; }

private:
    std::size_t step_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace chaoslab
