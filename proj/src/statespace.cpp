#include "smoothlab/statespace.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>
#include <string>

namespace smoothlab {

IntegratorModel::IntegratorModel(int order, double sigma, double rho)
    : order(order), sigma(sigma), rho(rho) {
    if (order < 1) throw std::invalid_argument("IntegratorModel: order must be >= 1");
    if (!(sigma > 0.0)) throw std::invalid_argument("IntegratorModel: sigma must be > 0");
    if (!(rho > 0.0)) throw std::invalid_argument("IntegratorModel: rho must be > 0");
}

GeneralLinearModel::GeneralLinearModel(Mat A_, Mat G_, Mat H_, Mat B_)
    : A(std::move(A_)), G(std::move(G_)), H(std::move(H_)), B(std::move(B_)) {
    const auto n = A.rows();
    if (A.cols() != n) throw std::invalid_argument("GeneralLinearModel: A must be square");
    if (G.rows() != n) throw std::invalid_argument("GeneralLinearModel: G rows must match A");
    if (H.cols() != n) throw std::invalid_argument("GeneralLinearModel: H cols must match A");
    if (B.rows() != H.rows() || B.cols() != H.rows())
        throw std::invalid_argument("GeneralLinearModel: B must be p x p");
    Eigen::LLT<Mat> llt(noise_cov());
    if (llt.info() != Eigen::Success)
        throw std::invalid_argument("GeneralLinearModel: B*B^T must be positive definite");
}

TimeGrid::TimeGrid(double t0_, double dt_, std::size_t steps_) : t0(t0_), dt(dt_), steps(steps_) {
    if (!(dt > 0.0)) throw std::invalid_argument("TimeGrid: dt must be > 0");
    if (steps < 1) throw std::invalid_argument("TimeGrid: steps must be >= 1");
}

GeneralLinearModel build_companion(const IntegratorModel& model) {
    const int n = model.order;
    Mat A = Mat::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) A(i, i + 1) = 1.0;
    Mat G = Mat::Zero(n, 1);
    G(n - 1, 0) = model.sigma;
    Mat H = Mat::Zero(1, n);
    H(0, 0) = 1.0;
    Mat B = Mat::Constant(1, 1, model.rho);
    return GeneralLinearModel(std::move(A), std::move(G), std::move(H), std::move(B));
}

std::vector<double> grid_times(const TimeGrid& grid) {
    std::vector<double> t(grid.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = grid.time(i);
    return t;
}

}  // namespace smoothlab
