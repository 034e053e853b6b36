#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <vector>

namespace smoothlab {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// n-th order integrator signal model: the n-th derivative of the scalar
// signal is driven by white noise of intensity sigma, and the signal is
// observed through white measurement noise of intensity rho.
struct IntegratorModel {
    int order;     // n >= 1
    double sigma;  // driving-noise intensity, > 0
    double rho;    // measurement-noise intensity, > 0

    IntegratorModel(int order, double sigma, double rho);
};

// General linear signal/measurement model
//   dx = A x dt + G dw,   y = H x + B v'
// with w, v vectors of independent Brownian motions.
struct GeneralLinearModel {
    Mat A;  // n x n
    Mat G;  // n x q
    Mat H;  // p x n
    Mat B;  // p x p, B*B^T positive definite

    GeneralLinearModel(Mat A, Mat G, Mat H, Mat B);

    int state_dim() const { return static_cast<int>(A.rows()); }
    int meas_dim() const { return static_cast<int>(H.rows()); }
    Mat noise_cov() const { return B * B.transpose(); }      // BB^T
    Mat drive_cov() const { return G * G.transpose(); }      // GG^T
};

// Uniform time grid; every series in the library lives on one of these
// and has exactly steps+1 samples.
struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    std::size_t steps = 0;

    TimeGrid(double t0, double dt, std::size_t steps);

    std::size_t size() const { return steps + 1; }
    double time(std::size_t i) const { return t0 + dt * static_cast<double>(i); }
    double t_end() const { return time(steps); }

    bool operator==(const TimeGrid&) const = default;
};

// Companion-form realization of the integrator model:
// A has ones on the superdiagonal, G = sigma*b, H = h^T, B = rho,
// with b = (0,...,0,1)^T and h = (1,0,...,0)^T.
GeneralLinearModel build_companion(const IntegratorModel& model);

std::vector<double> grid_times(const TimeGrid& grid);

}  // namespace smoothlab
