#pragma once

#include <stdexcept>
#include <string>

namespace randbc {

/// Bad configuration: unknown keys, malformed values, violated preconditions
/// detected while resolving a run. Maps to exit status 2.
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Failure of a numerical step on otherwise valid input. Maps to exit status 1.
class DomainError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Iterative or direct solve that did not reach the requested residual.
class SolverError : public DomainError {
public:
    SolverError(const std::string& what, double residual, int iterations)
        : DomainError(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

} // namespace randbc
