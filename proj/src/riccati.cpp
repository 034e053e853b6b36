#include "smoothlab/riccati.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <stdexcept>
#include <string>

#include "smoothlab/errors.hpp"

namespace smoothlab {

namespace {

// One shared evaluation context so the RK4 loop does not rebuild the
// constant matrices at every stage.
struct RiccatiEval {
    const Mat& A;
    Mat GGT;
    Mat HtRinvH;  // H^T (BB^T)^-1 H

    explicit RiccatiEval(const GeneralLinearModel& m)
        : A(m.A), GGT(m.drive_cov()), HtRinvH(m.H.transpose() * m.noise_cov().inverse() * m.H) {}

    Mat rhs(const Mat& P) const { return A * P + P * A.transpose() + GGT - P * HtRinvH * P; }
};

void check_dims(const GeneralLinearModel& model, const Mat& P) {
    if (P.rows() != model.A.rows() || P.cols() != model.A.cols())
        throw std::invalid_argument("riccati: P dimensions do not match the model");
}

}  // namespace

Mat riccati_rhs(const GeneralLinearModel& model, const Mat& P) {
    check_dims(model, P);
    return RiccatiEval(model).rhs(P);
}

CovarianceSchedule integrate_riccati(const GeneralLinearModel& model, const Mat& P0,
                                     const TimeGrid& grid) {
    check_dims(model, P0);
    {
        Eigen::SelfAdjointEigenSolver<Mat> es(P0);
        const double min_eig = es.eigenvalues().minCoeff();
        if (!(min_eig > 0.0))
            throw NotPositiveDefiniteError(
                "integrate_riccati: P0 must be strictly positive definite (min eigenvalue " +
                    std::to_string(min_eig) + ")",
                min_eig);
    }

    const RiccatiEval eval(model);
    const Mat Rinv = model.noise_cov().inverse();
    const double dt = grid.dt;
    constexpr double conv_tol = 1e-10;  // max-abs per-step change

    CovarianceSchedule sched{grid, {}, {}, std::nullopt, std::nullopt};
    sched.P.reserve(grid.size());
    sched.K.reserve(grid.size());

    Mat P = 0.5 * (P0 + P0.transpose());
    sched.P.push_back(P);
    for (std::size_t i = 0; i < grid.steps; ++i) {
        const Mat k1 = eval.rhs(P);
        const Mat k2 = eval.rhs(P + 0.5 * dt * k1);
        const Mat k3 = eval.rhs(P + 0.5 * dt * k2);
        const Mat k4 = eval.rhs(P + dt * k3);
        Mat next = P + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        next = 0.5 * (next + next.transpose()).eval();
        if (!next.allFinite())
            throw IntegrationDivergedError(
                "integrate_riccati: non-finite covariance at node " + std::to_string(i + 1),
                i + 1);
        if (!sched.converged_at && (next - P).cwiseAbs().maxCoeff() < conv_tol)
            sched.converged_at = i + 1;
        P = std::move(next);
        sched.P.push_back(P);
    }
    for (const Mat& Pi : sched.P) sched.K.push_back(Pi * model.H.transpose() * Rinv);

    // P_inf requires the RHS itself to be settled, not just the step size.
    if (sched.converged_at && eval.rhs(P).cwiseAbs().maxCoeff() < conv_tol) sched.P_inf = P;
    return sched;
}

Mat steady_state_covariance(const GeneralLinearModel& model, double tol, double dt,
                            std::size_t max_steps) {
    if (!(tol > 0.0)) throw std::invalid_argument("steady_state_covariance: tol must be > 0");
    if (!(dt > 0.0)) throw std::invalid_argument("steady_state_covariance: dt must be > 0");

    const RiccatiEval eval(model);
    Mat P = Mat::Identity(model.A.rows(), model.A.cols());
    double residual = eval.rhs(P).cwiseAbs().maxCoeff();
    for (std::size_t i = 0; i < max_steps; ++i) {
        const Mat k1 = eval.rhs(P);
        const Mat k2 = eval.rhs(P + 0.5 * dt * k1);
        const Mat k3 = eval.rhs(P + 0.5 * dt * k2);
        const Mat k4 = eval.rhs(P + dt * k3);
        Mat next = P + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        next = 0.5 * (next + next.transpose()).eval();
        if (!next.allFinite())
            throw IntegrationDivergedError(
                "steady_state_covariance: non-finite covariance at step " + std::to_string(i + 1),
                i + 1);
        const double step_change = (next - P).cwiseAbs().maxCoeff();
        P = std::move(next);
        residual = eval.rhs(P).cwiseAbs().maxCoeff();
        if (residual < 0.25 * tol && step_change < tol) return P;
    }
    throw NoConvergenceError("steady_state_covariance: no convergence within step cap (residual " +
                                 std::to_string(residual) + ")",
                             residual);
}

}  // namespace smoothlab
