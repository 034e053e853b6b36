#pragma once

#include <memory>
#include <utility>

#include "smoothlab/riccati.hpp"
#include "smoothlab/statespace.hpp"

namespace smoothlab {

// Series are stored one column per grid node.

struct MeasurementSeries {
    TimeGrid grid;
    Mat y;  // p x (steps+1)
};

struct FilterRun {
    TimeGrid grid;
    Mat xhat;  // n x (steps+1), causal estimate
    std::shared_ptr<const CovarianceSchedule> schedule;
};

enum class SmootherMethod { sweep, el_tpbvp };

struct SmootherRun {
    TimeGrid grid;
    Mat xhat_T;  // n x (steps+1), smoothed estimate x^(t|T)
    SmootherMethod method = SmootherMethod::sweep;
    bool accuracy_warning = false;  // el_tpbvp only: scaled residual above 1e-8
    double residual = 0.0;
};

struct AdjointSeries {
    TimeGrid grid;
    Mat lambda;  // n x (steps+1), terminal condition lambda(T) = 0
};

// Causal Kalman-Bucy filter
//   dx^/dt = A x^ + K(t) (y - H x^)
// integrated forward with Heun stepping, gains taken at the matching
// node.  The schedule is precomputed: P does not depend on the data, so
// Monte Carlo runs share one schedule.
FilterRun kalman_filter(const GeneralLinearModel& model,
                        std::shared_ptr<const CovarianceSchedule> schedule,
                        const MeasurementSeries& meas, const Vec& x0);

// Fixed-interval smoother by the backward sweep
//   d x^(t|T)/dt = A x^(t|T) + GG^T P^-1(t) [x^(t|T) - x^(t)]
// integrated backward from x^(T|T) = x^(T) with Heun stepping.  Every P
// node must be invertible; 1-norm condition above 1e12 is rejected.
SmootherRun sweep_smoother(const GeneralLinearModel& model, const FilterRun& filt);

// Direct solve of the smoothing two-point boundary-value problem
//   dx^/dt = A x^ - (1/2) GG^T lambda
//   dlambda/dt = -2 H^T (BB^T)^-1 H x^ - A^T lambda + 2 H^T (BB^T)^-1 y
// by midpoint finite differences; the block system is factored as a
// banded LU.  Boundary rows: x^(0|T) + (1/2) P0 lambda(0) = x0 (the
// prior-consistent form, which pins x^(0|T) = x0 as P0 -> 0) and
// lambda(T) = 0.  Used as the independent oracle for sweep_smoother.
std::pair<SmootherRun, AdjointSeries> el_tpbvp_solve(const GeneralLinearModel& model,
                                                     const MeasurementSeries& meas,
                                                     const Vec& x0, const Mat& P0);

}  // namespace smoothlab
