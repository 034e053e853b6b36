#include "smoothlab/kernels.hpp"

#include <Eigen/Cholesky>
#include <stdexcept>

#include "smoothlab/errors.hpp"

namespace smoothlab::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(__x86_64__) || defined(__i386__)
    return __builtin_cpu_supports("avx2");
#else
    return false;
#endif
}

}  // namespace

bool engine_available(Engine engine) {
    switch (engine) {
        case Engine::scalar: return true;
        case Engine::avx2: return cpu_has_avx2();
    }
    return false;
}

Engine best_engine() { return cpu_has_avx2() ? Engine::avx2 : Engine::scalar; }

const char* engine_name(Engine engine) {
    return engine == Engine::avx2 ? "avx2" : "scalar";
}

CompanionCoeffs make_companion_coeffs(const GeneralLinearModel& model,
                                      const CovarianceSchedule& schedule) {
    const int n = model.state_dim();
    if (model.meas_dim() != 1)
        throw std::invalid_argument("make_companion_coeffs: scalar measurement expected");
    const std::size_t nodes = schedule.grid.size();
    const double g2 = model.G(n - 1, 0) * model.G(n - 1, 0);  // sigma^2

    CompanionCoeffs c;
    c.n = n;
    c.nodes = nodes;
    c.dt = schedule.grid.dt;
    c.gain.resize(nodes * static_cast<std::size_t>(n));
    c.corr.resize(nodes * static_cast<std::size_t>(n));
    Mat eye = Mat::Identity(n, n);
    for (std::size_t i = 0; i < nodes; ++i) {
        for (int j = 0; j < n; ++j)
            c.gain[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
                schedule.K[i](j, 0);
        Eigen::LLT<Mat> llt(schedule.P[i]);
        if (llt.info() != Eigen::Success)
            throw SingularCovarianceError(
                "make_companion_coeffs: covariance not positive definite at node " +
                    std::to_string(i),
                i);
        const Mat Pinv = llt.solve(eye);
        // GG^T P^-1 has a single nonzero row (the last), sigma^2 * last row of P^-1.
        for (int j = 0; j < n; ++j)
            c.corr[i * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)] =
                g2 * Pinv(n - 1, j);
    }
    return c;
}

void run_filter_smoother_block(const CompanionCoeffs& coeffs, const double* y,
                               const double* truth1, double* const e1_filter[kLanes],
                               double* const e1_smoother[kLanes], Engine engine) {
    if (!engine_available(engine))
        throw std::invalid_argument("run_filter_smoother_block: engine not available");
    switch (engine) {
        case Engine::scalar:
            detail::filter_smoother_block_scalar(coeffs, y, truth1, e1_filter, e1_smoother);
            return;
        case Engine::avx2:
#if defined(__x86_64__) || defined(__i386__)
            detail::filter_smoother_block_avx2(coeffs, y, truth1, e1_filter, e1_smoother);
            return;
#else
            break;
#endif
    }
    throw std::invalid_argument("run_filter_smoother_block: unknown engine");
}

void NodeStats::add_path(const double* values, Engine engine) {
    ++count;
    const auto cnt = static_cast<double>(count);
#if defined(__x86_64__) || defined(__i386__)
    if (engine == Engine::avx2 && engine_available(Engine::avx2)) {
        detail::welford_add_avx2(mean.data(), m2.data(), values, mean.size(), cnt);
        return;
    }
#endif
    detail::welford_add_scalar(mean.data(), m2.data(), values, mean.size(), cnt);
}

}  // namespace smoothlab::kernels
