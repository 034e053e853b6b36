#include "smoothlab/analysis.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "smoothlab/errors.hpp"

namespace smoothlab {

SsePrediction predict_sse(int n, int m, double a, double sigma, double rho, Subject subject,
                          const std::optional<TransferFunction>& gains) {
    if (n < 1 || m < 0) throw std::invalid_argument("predict_sse: need n >= 1, m >= 0");
    if (!(sigma > 0.0) || !(rho > 0.0))
        throw std::invalid_argument("predict_sse: sigma, rho must be > 0");
    if (a == 0.0) return {Regime::Zero, std::nullopt, subject};

    if (subject == Subject::smoother) {
        if (m < n) return {Regime::Zero, std::nullopt, subject};
        if (m == n) {
            // Steady solution of the error/adjoint cascade: the adjoint
            // chain integrates lambda_n = -2 a t^m / (sigma^2 m!) up
            // n-1 times, and lambda_1' = -(2/rho^2) e_1 closes it:
            //   e_1 = (-1)^(n+1) a (rho/sigma)^2.
            const double sign = (n % 2 == 1) ? 1.0 : -1.0;
            return {Regime::Constant, sign * a * (rho / sigma) * (rho / sigma), subject};
        }
        return {Regime::Unbounded, std::nullopt, subject};
    }

    // Filter: type-n loop tracking a t^(m+n)/(m+n)!.
    if (m == 0) {
        if (!gains || gains->numerator.empty())
            throw std::invalid_argument("predict_sse: filter m=0 prediction requires gains");
        return {Regime::Constant, -a / gains->numerator.back(), subject};
    }
    return {Regime::Unbounded, std::nullopt, subject};
}

TransferFunction loop_transfer(const CovarianceSchedule& schedule, const IntegratorModel& model) {
    if (!schedule.P_inf)
        throw NoConvergenceError("loop_transfer: schedule has no steady covariance", 0.0);
    const int n = model.order;
    const Mat& Pinf = *schedule.P_inf;
    TransferFunction tf;
    tf.type_order = n;
    tf.numerator.resize(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) tf.numerator[static_cast<std::size_t>(j)] =
        Pinf(j, 0) / (model.rho * model.rho);
    return tf;
}

FinalValueResult final_value_error(const TransferFunction& tf, double a, int p) {
    if (p < 1) throw std::invalid_argument("final_value_error: p must be >= 1");
    const int n = tf.type_order;
    if (a == 0.0 || p <= n) return {Regime::Zero, std::nullopt};
    if (p == n + 1) return {Regime::Constant, -a / tf.numerator.back()};
    return {Regime::Unbounded, std::nullopt};
}

namespace {

ErrorSeries make_error(const TimeGrid& run_grid, const Mat& estimate, const SignalRun& truth,
                       Subject subject) {
    if (!(run_grid == truth.grid)) throw GridMismatchError("error_series: grids differ");
    return ErrorSeries{run_grid, estimate - truth.x_true, subject};
}

}  // namespace

ErrorSeries error_series(const FilterRun& run, const SignalRun& truth) {
    return make_error(run.grid, run.xhat, truth, Subject::filter);
}

ErrorSeries error_series(const SmootherRun& run, const SignalRun& truth) {
    return make_error(run.grid, run.xhat_T, truth, Subject::smoother);
}

namespace {

struct WindowFit {
    double mean = 0.0;
    double slope = 0.0;
};

WindowFit fit_window(const ErrorSeries& s, std::size_t i0, std::size_t i1) {
    const std::size_t count = i1 - i0 + 1;
    double sum = 0.0;
    for (std::size_t i = i0; i <= i1; ++i) sum += s.e(0, static_cast<Eigen::Index>(i));
    const double mean = sum / static_cast<double>(count);
    // Least-squares slope against time.
    const double tmid = 0.5 * (s.grid.time(i0) + s.grid.time(i1));
    double num = 0.0, den = 0.0;
    for (std::size_t i = i0; i <= i1; ++i) {
        const double dtc = s.grid.time(i) - tmid;
        num += dtc * (s.e(0, static_cast<Eigen::Index>(i)) - mean);
        den += dtc * dtc;
    }
    return {mean, den > 0.0 ? num / den : 0.0};
}

}  // namespace

SteadyStateVerdict classify_steady_state(const ErrorSeries& series, double window_fraction,
                                         double slope_tol, double magnitude_cap) {
    if (!(window_fraction > 0.0 && window_fraction < 0.5))
        throw std::invalid_argument("classify_steady_state: window_fraction in (0, 0.5)");
    if (!(slope_tol > 0.0))
        throw std::invalid_argument("classify_steady_state: slope_tol must be > 0");

    const std::size_t N = series.grid.steps;
    const auto lo = static_cast<std::size_t>(std::llround(window_fraction * static_cast<double>(N)));
    std::size_t i0, i1;
    if (series.subject == Subject::smoother) {
        i0 = lo;
        i1 = N - lo;
    } else {
        i0 = N - lo;
        i1 = N;
    }
    if (i1 <= i0 || i1 - i0 + 1 < 10)
        throw std::invalid_argument("classify_steady_state: window shorter than 10 samples");

    const WindowFit fit = fit_window(series, i0, i1);
    const double T = series.grid.t_end() - series.grid.t0;
    const double zero_band = 1e-3 * T * slope_tol;

    SteadyStateVerdict v{VerdictRegime::Undetermined, std::nullopt, {i0, i1}};
    if (std::abs(fit.slope) <= slope_tol) {
        if (std::abs(fit.mean) <= zero_band) {
            v.regime = VerdictRegime::Zero;
        } else {
            v.regime = VerdictRegime::Constant;
            v.value = fit.mean;
        }
        return v;
    }

    // Growth test on the trailing quarter of the full series.
    const std::size_t q0 = (3 * N) / 4;
    const WindowFit qfit = fit_window(series, q0, N);
    double max_abs = 0.0;
    for (std::size_t i = q0; i <= N; ++i)
        max_abs = std::max(max_abs, std::abs(series.e(0, static_cast<Eigen::Index>(i))));
    if (max_abs > magnitude_cap && std::abs(qfit.slope) > 10.0 * slope_tol)
        v.regime = VerdictRegime::Unbounded;
    return v;
}

std::vector<std::complex<double>> loop_poles(const TransferFunction& tf) {
    const int n = tf.type_order;
    // Companion matrix of S^n + k1 S^(n-1) + ... + kn.
    Mat C = Mat::Zero(n, n);
    for (int i = 0; i + 1 < n; ++i) C(i + 1, i) = 1.0;
    for (int j = 0; j < n; ++j) C(0, j) = -tf.numerator[static_cast<std::size_t>(j)];
    Eigen::EigenSolver<Mat> es(C);
    std::vector<std::complex<double>> poles(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) poles[static_cast<std::size_t>(i)] = es.eigenvalues()(i);
    return poles;
}

double default_horizon(const TransferFunction& tf) {
    double min_decay = std::numeric_limits<double>::infinity();
    for (const auto& p : loop_poles(tf)) min_decay = std::min(min_decay, std::abs(p.real()));
    if (!(min_decay > 0.0))
        throw std::invalid_argument("default_horizon: loop has a non-decaying pole");
    return 40.0 / min_decay;
}

MonteCarloStats monte_carlo_variance(const IntegratorModel& model, const PolynomialDrift& drift,
                                     const TimeGrid& grid, std::size_t paths, std::uint64_t seed,
                                     kernels::Engine engine,
                                     const std::vector<std::uint64_t>* explicit_seeds) {
    if (paths < 2) throw std::invalid_argument("monte_carlo_variance: paths must be >= 2");
    if (explicit_seeds && explicit_seeds->size() != paths)
        throw std::invalid_argument("monte_carlo_variance: explicit seed count != paths");
    if (!kernels::engine_available(engine))
        throw std::invalid_argument("monte_carlo_variance: engine not available on this CPU");

    const GeneralLinearModel sys = build_companion(model);
    const auto schedule = std::make_shared<const CovarianceSchedule>(
        integrate_riccati(sys, Mat::Identity(model.order, model.order), grid));
    const kernels::CompanionCoeffs coeffs = kernels::make_companion_coeffs(sys, *schedule);

    const std::size_t nodes = grid.size();
    kernels::NodeStats stats_f(nodes), stats_s(nodes);
    std::vector<std::vector<double>> e1f(kernels::kLanes, std::vector<double>(nodes));
    std::vector<std::vector<double>> e1s(kernels::kLanes, std::vector<double>(nodes));
    std::vector<double> y_block(nodes * kernels::kLanes, 0.0);
    std::vector<double> t_block(nodes * kernels::kLanes, 0.0);

    for (std::size_t base = 0; base < paths; base += kernels::kLanes) {
        const std::size_t lanes = std::min<std::size_t>(kernels::kLanes, paths - base);
        for (std::size_t lane = 0; lane < lanes; ++lane) {
            const std::uint64_t path_seed = explicit_seeds
                                                ? (*explicit_seeds)[base + lane]
                                                : seed + static_cast<std::uint64_t>(base + lane);
            const SignalRun sig = stochastic_signal(model, drift, grid, path_seed);
            for (std::size_t i = 0; i < nodes; ++i) {
                y_block[i * kernels::kLanes + lane] = sig.y.y(0, static_cast<Eigen::Index>(i));
                t_block[i * kernels::kLanes + lane] = sig.x_true(0, static_cast<Eigen::Index>(i));
            }
        }
        // Inactive lanes repeat lane 0 so the block arithmetic stays finite.
        for (std::size_t lane = lanes; lane < kernels::kLanes; ++lane)
            for (std::size_t i = 0; i < nodes; ++i) {
                y_block[i * kernels::kLanes + lane] = y_block[i * kernels::kLanes];
                t_block[i * kernels::kLanes + lane] = t_block[i * kernels::kLanes];
            }

        double* e1f_ptr[kernels::kLanes];
        double* e1s_ptr[kernels::kLanes];
        for (int l = 0; l < kernels::kLanes; ++l) {
            e1f_ptr[l] = e1f[static_cast<std::size_t>(l)].data();
            e1s_ptr[l] = e1s[static_cast<std::size_t>(l)].data();
        }
        kernels::run_filter_smoother_block(coeffs, y_block.data(), t_block.data(), e1f_ptr,
                                           e1s_ptr, engine);

        for (std::size_t lane = 0; lane < lanes; ++lane) {
            for (std::size_t i = 0; i < nodes; ++i)
                if (!std::isfinite(e1f[lane][i]) || !std::isfinite(e1s[lane][i]))
                    throw IntegrationDivergedError(
                        "monte_carlo_variance: estimator diverged on path " +
                            std::to_string(base + lane),
                        base + lane);
            stats_f.add_path(e1f[lane].data(), engine);
            stats_s.add_path(e1s[lane].data(), engine);
        }
    }

    MonteCarloStats out{grid, stats_f.mean, {}, stats_s.mean, {}, paths};
    out.var_filter.resize(nodes);
    out.var_smoother.resize(nodes);
    for (std::size_t i = 0; i < nodes; ++i) {
        out.var_filter[i] = stats_f.variance(i);
        out.var_smoother[i] = stats_s.variance(i);
    }
    return out;
}

}  // namespace smoothlab
