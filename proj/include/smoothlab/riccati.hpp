#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "smoothlab/statespace.hpp"

namespace smoothlab {

// Filter covariance P(t) propagated on a grid, with the gain schedule
// K(t) = P H^T (BB^T)^-1 evaluated at every node.  P_inf is set once the
// trajectory has settled (Riccati RHS below the convergence tolerance).
struct CovarianceSchedule {
    TimeGrid grid;
    std::vector<Mat> P;  // n x n, one per node, symmetric PSD
    std::vector<Mat> K;  // n x p, one per node
    std::optional<Mat> P_inf;
    std::optional<std::size_t> converged_at;
};

// Riccati right-hand side  AP + PA^T + GG^T - P H^T (BB^T)^-1 H P.
Mat riccati_rhs(const GeneralLinearModel& model, const Mat& P);

// Classical fixed-step RK4 on the Riccati ODE, symmetrized after every
// step.  P0 must be strictly positive definite: the backward sweep needs
// P^-1 on the whole grid.
CovarianceSchedule integrate_riccati(const GeneralLinearModel& model, const Mat& P0,
                                     const TimeGrid& grid);

// Long-horizon limit of the Riccati flow from P0 = I.  Stops when the
// RHS max-abs entry drops below tol/4 (certifies |P - P_inf| < tol for
// the integrator family, whose linearized decay rate exceeds 1/4 over
// the tested sigma/rho range) and the per-step change is below tol.
Mat steady_state_covariance(const GeneralLinearModel& model, double tol, double dt = 1e-3,
                            std::size_t max_steps = 10'000'000);

}  // namespace smoothlab
