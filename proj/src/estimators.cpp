#include "smoothlab/estimators.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <lapacke.h>
#include <stdexcept>
#include <string>
#include <vector>

#include "smoothlab/errors.hpp"

namespace smoothlab {

namespace {

void require_same_grid(const TimeGrid& a, const TimeGrid& b, const char* what) {
    if (!(a == b)) throw GridMismatchError(std::string(what) + ": grids differ");
}

// General banded matrix in LAPACK band storage, factored by dgbsv.
class BandedSystem {
  public:
    BandedSystem(lapack_int size, lapack_int kl, lapack_int ku)
        : size_(size), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
          ab_(static_cast<std::size_t>(ldab_) * size_, 0.0), ipiv_(size_) {}

    void add(lapack_int i, lapack_int j, double v) {
        ab_[static_cast<std::size_t>(j) * ldab_ + (kl_ + ku_ + i - j)] += v;
    }

    // Solves in place; returns dgbsv's info code (0 = success).
    lapack_int solve(std::vector<double>& rhs) {
        return LAPACKE_dgbsv(LAPACK_COL_MAJOR, size_, kl_, ku_, 1, ab_.data(), ldab_,
                             ipiv_.data(), rhs.data(), size_);
    }

  private:
    lapack_int size_, kl_, ku_, ldab_;
    std::vector<double> ab_;
    std::vector<lapack_int> ipiv_;
};

}  // namespace

FilterRun kalman_filter(const GeneralLinearModel& model,
                        std::shared_ptr<const CovarianceSchedule> schedule,
                        const MeasurementSeries& meas, const Vec& x0) {
    if (!schedule) throw std::invalid_argument("kalman_filter: schedule required");
    require_same_grid(schedule->grid, meas.grid, "kalman_filter");
    const int n = model.state_dim();
    if (x0.size() != n || !x0.allFinite())
        throw std::invalid_argument("kalman_filter: x0 must be a finite n-vector");
    if (meas.y.rows() != model.meas_dim() ||
        meas.y.cols() != static_cast<Eigen::Index>(meas.grid.size()))
        throw std::invalid_argument("kalman_filter: measurement dimensions do not match");

    const TimeGrid& grid = meas.grid;
    const double dt = grid.dt;
    const auto N = static_cast<Eigen::Index>(grid.steps);

    Mat xhat(n, N + 1);
    Vec x = x0, f1(n), xp(n), f2(n);
    xhat.col(0) = x;
    for (Eigen::Index i = 0; i < N; ++i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        f1 = model.A * x + schedule->K[ui] * (meas.y.col(i) - model.H * x);
        xp = x + dt * f1;
        f2 = model.A * xp + schedule->K[ui + 1] * (meas.y.col(i + 1) - model.H * xp);
        x += 0.5 * dt * (f1 + f2);
        if (!x.allFinite())
            throw IntegrationDivergedError(
                "kalman_filter: non-finite state at node " + std::to_string(i + 1),
                static_cast<std::size_t>(i + 1));
        xhat.col(i + 1) = x;
    }
    return FilterRun{grid, std::move(xhat), std::move(schedule)};
}

SmootherRun sweep_smoother(const GeneralLinearModel& model, const FilterRun& filt) {
    if (!filt.schedule) throw std::invalid_argument("sweep_smoother: run carries no schedule");
    const CovarianceSchedule& sched = *filt.schedule;
    require_same_grid(sched.grid, filt.grid, "sweep_smoother");
    const int n = model.state_dim();
    const TimeGrid& grid = filt.grid;
    const double dt = grid.dt;
    const auto N = static_cast<Eigen::Index>(grid.steps);
    const Mat GGT = model.drive_cov();
    constexpr double cond_limit = 1e12;

    // Correction matrices GG^T P^-1 for every node, with a 1-norm
    // condition screen before trusting the inverse.
    std::vector<Mat> corr(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const Mat& P = sched.P[i];
        Eigen::LLT<Mat> llt(P);
        if (llt.info() != Eigen::Success)
            throw SingularCovarianceError(
                "sweep_smoother: covariance not positive definite at node " + std::to_string(i),
                i);
        const Mat Pinv = llt.solve(Mat::Identity(n, n));
        const double cond1 = P.cwiseAbs().colwise().sum().maxCoeff() *
                             Pinv.cwiseAbs().colwise().sum().maxCoeff();
        if (!(cond1 < cond_limit))
            throw SingularCovarianceError("sweep_smoother: covariance at node " +
                                              std::to_string(i) + " has 1-norm condition " +
                                              std::to_string(cond1),
                                          i);
        corr[i] = GGT * Pinv;
    }

    Mat xs(n, N + 1);
    Vec z = filt.xhat.col(N), g1(n), zp(n), g2(n);
    xs.col(N) = z;  // x^(T|T) = x^(T), exactly
    for (Eigen::Index i = N - 1; i >= 0; --i) {
        const std::size_t ui = static_cast<std::size_t>(i);
        g1 = model.A * z + corr[ui + 1] * (z - filt.xhat.col(i + 1));
        zp = z - dt * g1;
        g2 = model.A * zp + corr[ui] * (zp - filt.xhat.col(i));
        z -= 0.5 * dt * (g1 + g2);
        if (!z.allFinite())
            throw IntegrationDivergedError(
                "sweep_smoother: non-finite state at node " + std::to_string(i), ui);
        xs.col(i) = z;
    }
    return SmootherRun{grid, std::move(xs), SmootherMethod::sweep};
}

std::pair<SmootherRun, AdjointSeries> el_tpbvp_solve(const GeneralLinearModel& model,
                                                     const MeasurementSeries& meas,
                                                     const Vec& x0, const Mat& P0) {
    const int n = model.state_dim();
    const int p = model.meas_dim();
    if (x0.size() != n || !x0.allFinite())
        throw std::invalid_argument("el_tpbvp_solve: x0 must be a finite n-vector");
    if (P0.rows() != n || P0.cols() != n)
        throw std::invalid_argument("el_tpbvp_solve: P0 must be n x n");
    if (meas.y.rows() != p || meas.y.cols() != static_cast<Eigen::Index>(meas.grid.size()))
        throw std::invalid_argument("el_tpbvp_solve: measurement dimensions do not match");

    const TimeGrid& grid = meas.grid;
    const double dt = grid.dt;
    const auto N = static_cast<Eigen::Index>(grid.steps);
    const int m2 = 2 * n;

    const Mat Rinv = model.noise_cov().inverse();
    const Mat HtRinv = model.H.transpose() * Rinv;

    // State/adjoint dynamics z' = M z + g(t), g = (0, 2 H^T (BB^T)^-1 y).
    Mat M(m2, m2);
    M.topLeftCorner(n, n) = model.A;
    M.topRightCorner(n, n) = -0.5 * model.drive_cov();
    M.bottomLeftCorner(n, n) = -2.0 * HtRinv * model.H;
    M.bottomRightCorner(n, n) = -model.A.transpose();

    // Midpoint differences:  -(I + dt/2 M) z_i + (I - dt/2 M) z_{i+1} = dt g_mid.
    const Mat L = -(Mat::Identity(m2, m2) + 0.5 * dt * M);
    const Mat U = Mat::Identity(m2, m2) - 0.5 * dt * M;

    const lapack_int band = 3 * n - 1;
    const auto total = static_cast<lapack_int>(static_cast<Eigen::Index>(m2) * (N + 1));
    BandedSystem sys(total, band, band);
    std::vector<double> rhs(static_cast<std::size_t>(total), 0.0);

    const auto col_of = [m2](Eigen::Index node, int comp) {
        return static_cast<lapack_int>(m2 * node + comp);
    };

    lapack_int row = 0;
    // Prior-consistent left boundary: x(0) + (1/2) P0 lambda(0) = x0
    // (hard pin x(0) = x0 in the P0 -> 0 limit).
    for (int j = 0; j < n; ++j, ++row) {
        sys.add(row, col_of(0, j), 1.0);
        for (int c = 0; c < n; ++c) sys.add(row, col_of(0, n + c), 0.5 * P0(j, c));
        rhs[static_cast<std::size_t>(row)] = x0(j);
    }
    Vec gmid(m2);
    for (Eigen::Index i = 0; i < N; ++i) {
        gmid.setZero();
        gmid.tail(n) = 2.0 * HtRinv * (0.5 * (meas.y.col(i) + meas.y.col(i + 1)));
        for (int r = 0; r < m2; ++r) {
            for (int c = 0; c < m2; ++c) {
                sys.add(row + r, col_of(i, c), L(r, c));
                sys.add(row + r, col_of(i + 1, c), U(r, c));
            }
            rhs[static_cast<std::size_t>(row + r)] = dt * gmid(r);
        }
        row += m2;
    }
    for (int j = 0; j < n; ++j, ++row) sys.add(row, col_of(N, n + j), 1.0);

    const lapack_int info = sys.solve(rhs);
    if (info != 0)
        throw SolveFailureError("el_tpbvp_solve: banded solve failed (dgbsv info " +
                                std::to_string(info) + ")");

    Mat xs(n, N + 1), lam(n, N + 1);
    for (Eigen::Index i = 0; i <= N; ++i)
        for (int j = 0; j < n; ++j) {
            xs(j, i) = rhs[static_cast<std::size_t>(m2 * i + j)];
            lam(j, i) = rhs[static_cast<std::size_t>(m2 * i + n + j)];
        }
    if (!xs.allFinite() || !lam.allFinite())
        throw SolveFailureError("el_tpbvp_solve: non-finite solution from banded solve");

    // Residual of the discretized ODEs, scaled by the problem size.
    double raw = 0.0, zmax = 0.0, gmax = 0.0;
    Vec zi(m2), zj(m2), res(m2);
    for (Eigen::Index i = 0; i < N; ++i) {
        zi << xs.col(i), lam.col(i);
        zj << xs.col(i + 1), lam.col(i + 1);
        gmid.setZero();
        gmid.tail(n) = 2.0 * HtRinv * (0.5 * (meas.y.col(i) + meas.y.col(i + 1)));
        res = (zj - zi) / dt - M * (0.5 * (zi + zj)) - gmid;
        raw = std::max(raw, res.cwiseAbs().maxCoeff());
        zmax = std::max({zmax, zi.cwiseAbs().maxCoeff(), zj.cwiseAbs().maxCoeff()});
        gmax = std::max(gmax, gmid.cwiseAbs().maxCoeff());
    }
    const double scale = M.cwiseAbs().rowwise().sum().maxCoeff() * zmax + gmax + 1.0;
    const double scaled = raw / scale;

    SmootherRun run{grid, std::move(xs), SmootherMethod::el_tpbvp};
    run.residual = scaled;
    run.accuracy_warning = scaled > 1e-8;
    return {std::move(run), AdjointSeries{grid, std::move(lam)}};
}

}  // namespace smoothlab
