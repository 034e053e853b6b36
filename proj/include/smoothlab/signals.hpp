#pragma once

#include <cstdint>
#include <optional>

#include "smoothlab/estimators.hpp"
#include "smoothlab/statespace.hpp"

namespace smoothlab {

// Polynomial forcing of the model's n-th derivative: a * t^m / m!.
struct PolynomialDrift {
    double a = 0.0;
    int m = 0;  // >= 0

    PolynomialDrift(double a, int m);
};

struct SignalRun {
    TimeGrid grid;
    Mat x_true;  // n x (steps+1): the signal and its derivatives
    MeasurementSeries y;
    std::optional<std::uint64_t> seed;  // absent = noiseless
};

// Exact polynomial solution of x~^(n) = a t^m / m! with zero initial
// conditions: first component a t^(m+n)/(m+n)!, k-th component its
// (k-1)-th derivative.  y = x~ exactly (no integration involved).
SignalRun noiseless_signal(const IntegratorModel& model, const PolynomialDrift& drift,
                           const TimeGrid& grid);

// Euler-Maruyama path of the companion SDE plus the closed-form drift
// response (the drift enters linearly, so superposition is exact).
// Measurement samples carry the discrete white-noise scaling
//   y_i = x~_i + rho * eta_i / sqrt(dt).
// One mt19937_64 generator; draw order per step i: driving increment
// xi_i, then measurement sample eta_i; the final node's eta last.
SignalRun stochastic_signal(const IntegratorModel& model, const PolynomialDrift& drift,
                            const TimeGrid& grid, std::uint64_t seed);

}  // namespace smoothlab
