#include "smoothlab/signals.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace smoothlab {

namespace {

double t_pow_over_factorial(double t, int p) {
    // t^p / p!, evaluated as a running product to avoid overflow of p!.
    double r = 1.0;
    for (int k = 1; k <= p; ++k) r *= t / static_cast<double>(k);
    return r;
}

Mat drift_response(const IntegratorModel& model, const PolynomialDrift& drift,
                   const TimeGrid& grid) {
    const int n = model.order;
    Mat x = Mat::Zero(n, static_cast<Eigen::Index>(grid.size()));
    if (drift.a == 0.0) return x;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double t = grid.time(i);
        for (int k = 0; k < n; ++k)
            x(k, static_cast<Eigen::Index>(i)) =
                drift.a * t_pow_over_factorial(t, drift.m + n - k);
    }
    return x;
}

}  // namespace

PolynomialDrift::PolynomialDrift(double a_, int m_) : a(a_), m(m_) {
    if (m < 0) throw std::invalid_argument("PolynomialDrift: m must be >= 0");
    if (!std::isfinite(a)) throw std::invalid_argument("PolynomialDrift: a must be finite");
}

SignalRun noiseless_signal(const IntegratorModel& model, const PolynomialDrift& drift,
                           const TimeGrid& grid) {
    Mat x = drift_response(model, drift, grid);
    MeasurementSeries meas{grid, x.row(0)};
    return SignalRun{grid, std::move(x), std::move(meas), std::nullopt};
}

SignalRun stochastic_signal(const IntegratorModel& model, const PolynomialDrift& drift,
                            const TimeGrid& grid, std::uint64_t seed) {
    const int n = model.order;
    const auto N = static_cast<Eigen::Index>(grid.steps);
    const double dt = grid.dt;
    const double sqrt_dt = std::sqrt(dt);

    std::mt19937_64 gen(seed);
    std::normal_distribution<double> normal(0.0, 1.0);

    // Zero-drift Euler-Maruyama path; the drift response is superposed in
    // closed form afterwards so the decomposition into deterministic and
    // stochastic parts is exact.
    Mat x = Mat::Zero(n, N + 1);
    Vec eta(N + 1);
    Vec state = Vec::Zero(n);
    Vec shifted(n);
    for (Eigen::Index i = 0; i < N; ++i) {
        const double xi = normal(gen);
        eta(i) = normal(gen);
        // companion A: (A x)_k = x_{k+1}
        for (int k = 0; k + 1 < n; ++k) shifted(k) = state(k + 1);
        shifted(n - 1) = 0.0;
        state += dt * shifted;
        state(n - 1) += model.sigma * sqrt_dt * xi;
        x.col(i + 1) = state;
    }
    eta(N) = normal(gen);

    x += drift_response(model, drift, grid);

    Mat y(1, N + 1);
    for (Eigen::Index i = 0; i <= N; ++i) y(0, i) = x(0, i) + model.rho * eta(i) / sqrt_dt;

    return SignalRun{grid, std::move(x), MeasurementSeries{grid, std::move(y)}, seed};
}

}  // namespace smoothlab
