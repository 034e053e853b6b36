#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace smoothlab {

// Contract violations (bad arguments, mismatched grids/dimensions) are
// std::invalid_argument; runtime failures carry the failing location.

struct GridMismatchError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct NotPositiveDefiniteError : std::invalid_argument {
    NotPositiveDefiniteError(const std::string& what, double eigenvalue)
        : std::invalid_argument(what), eigenvalue(eigenvalue) {}
    double eigenvalue;
};

struct IntegrationDivergedError : std::runtime_error {
    IntegrationDivergedError(const std::string& what, std::size_t node)
        : std::runtime_error(what), node(node) {}
    std::size_t node;
};

struct SingularCovarianceError : std::runtime_error {
    SingularCovarianceError(const std::string& what, std::size_t node)
        : std::runtime_error(what), node(node) {}
    std::size_t node;
};

struct NoConvergenceError : std::runtime_error {
    NoConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

struct SolveFailureError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace smoothlab
