#include "doctest.h"
#include "smoothlab/errors.hpp"
#include "smoothlab/estimators.hpp"
#include "smoothlab/signals.hpp"

#include <cmath>
#include <memory>
#include <random>

using namespace smoothlab;

namespace {

std::shared_ptr<const CovarianceSchedule> schedule_for(const GeneralLinearModel& m,
                                                       const TimeGrid& grid,
                                                       double p0_scale = 1.0) {
    return std::make_shared<const CovarianceSchedule>(
        integrate_riccati(m, p0_scale * Mat::Identity(m.state_dim(), m.state_dim()), grid));
}

double scaled_first_component_gap(const SmootherRun& a, const SmootherRun& b, const Mat& x_true) {
    const double scale = std::max(x_true.row(0).cwiseAbs().maxCoeff(), 1e-30);
    return (a.xhat_T.row(0) - b.xhat_T.row(0)).cwiseAbs().maxCoeff() / scale;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("filter: zero input stays at the origin") {
    const auto m = build_companion(IntegratorModel(2, 1, 1));
    const TimeGrid grid(0.0, 1e-2, 500);
    MeasurementSeries meas{grid, Mat::Zero(1, grid.size())};
    const auto run = kalman_filter(m, schedule_for(m, grid), meas, Vec::Zero(2));
    CHECK(run.xhat.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("filter: constant signal already tracked is a fixed point") {
    const auto m = build_companion(IntegratorModel(1, 1, 1));
    const TimeGrid grid(0.0, 1e-2, 500);
    const double c = 3.25;
    MeasurementSeries meas{grid, Mat::Constant(1, grid.size(), c)};
    const auto run = kalman_filter(m, schedule_for(m, grid), meas, Vec::Constant(1, c));
    CHECK((run.xhat.array() - c).abs().maxCoeff() == 0.0);
}

TEST_CASE("filter: noiseless ramp settles at -a/k") {
    // sigma = rho = 1 puts the scalar covariance at its fixed point, so the
    // gain is exactly 1; the error obeys e' = -e - a with solution
    // e(t) = -a (1 - exp(-t)).
    const auto m = build_companion(IntegratorModel(1, 1, 1));
    const TimeGrid grid(0.0, 1e-3, 20000);
    const auto truth = noiseless_signal(IntegratorModel(1, 1, 1), PolynomialDrift(1.0, 0), grid);
    const auto run = kalman_filter(m, schedule_for(m, grid), truth.y, Vec::Zero(1));
    for (std::size_t i = 0; i < grid.size(); i += 1000) {
        const double e = run.xhat(0, i) - truth.x_true(0, i);
        const double expected = -(1.0 - std::exp(-grid.time(i)));
        CHECK(e == doctest::Approx(expected).epsilon(1e-5).scale(1.0));
    }
    const double eT = run.xhat(0, grid.steps) - truth.x_true(0, grid.steps);
    CHECK(std::abs(eT - (-1.0)) < 0.01);
}

TEST_CASE("sweep: boundary condition is exact and constant case trivial") {
    const auto m = build_companion(IntegratorModel(1, 1, 1));
    const TimeGrid grid(0.0, 1e-2, 300);
    const double c = -1.5;
    MeasurementSeries meas{grid, Mat::Constant(1, grid.size(), c)};
    const auto filt = kalman_filter(m, schedule_for(m, grid), meas, Vec::Constant(1, c));
    const auto sm = sweep_smoother(m, filt);
    CHECK(sm.xhat_T(0, grid.steps) == filt.xhat(0, grid.steps));
    CHECK((sm.xhat_T.array() - c).abs().maxCoeff() < 1e-12);
    CHECK(sm.method == SmootherMethod::sweep);
}

TEST_CASE("offset regime: smoother interior error vanishes, filter holds -a") {
    const IntegratorModel im(1, 1, 1);
    const auto m = build_companion(im);
    const TimeGrid grid(0.0, 1e-3, 40000);
    const auto truth = noiseless_signal(im, PolynomialDrift(1.0, 0), grid);
    const auto filt = kalman_filter(m, schedule_for(m, grid), truth.y, Vec::Zero(1));
    const auto sm = sweep_smoother(m, filt);
    double max_interior = 0.0;
    for (std::size_t i = grid.steps / 5; i <= 4 * (grid.steps / 5); ++i)
        max_interior = std::max(max_interior, std::abs(sm.xhat_T(0, i) - truth.x_true(0, i)));
    CHECK(max_interior < 0.01);
    const double ef = filt.xhat(0, grid.steps) - truth.x_true(0, grid.steps);
    CHECK(ef == doctest::Approx(-1.0).epsilon(0.01));
}

TEST_CASE("m = n regime: smoother interior error is (-1)^(n+1) a (rho/sigma)^2") {
    SUBCASE("n=1, sigma=rho: +a") {
        const IntegratorModel im(1, 1, 1);
        const auto m = build_companion(im);
        const TimeGrid grid(0.0, 1e-3, 40000);
        const auto truth = noiseless_signal(im, PolynomialDrift(1.0, 1), grid);
        const auto filt = kalman_filter(m, schedule_for(m, grid), truth.y, Vec::Zero(1));
        const auto sm = sweep_smoother(m, filt);
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = grid.steps / 4; i <= 3 * (grid.steps / 4); ++i, ++cnt)
            acc += sm.xhat_T(0, i) - truth.x_true(0, i);
        CHECK(acc / static_cast<double>(cnt) == doctest::Approx(1.0).epsilon(0.01));
    }
    SUBCASE("n=1, sigma=2, rho=1: +a/4") {
        const IntegratorModel im(1, 2, 1);
        const auto m = build_companion(im);
        const TimeGrid grid(0.0, 1e-3, 40000);
        const auto truth = noiseless_signal(im, PolynomialDrift(1.0, 1), grid);
        const auto filt = kalman_filter(m, schedule_for(m, grid), truth.y, Vec::Zero(1));
        const auto sm = sweep_smoother(m, filt);
        double acc = 0.0;
        std::size_t cnt = 0;
        for (std::size_t i = grid.steps / 4; i <= 3 * (grid.steps / 4); ++i, ++cnt)
            acc += sm.xhat_T(0, i) - truth.x_true(0, i);
        CHECK(acc / static_cast<double>(cnt) == doctest::Approx(0.25).epsilon(0.02));
    }
}

TEST_CASE("tpbvp: homogeneous problem returns zero state and adjoint") {
    const auto m = build_companion(IntegratorModel(2, 1, 1));
    const TimeGrid grid(0.0, 1e-2, 200);
    MeasurementSeries meas{grid, Mat::Zero(1, grid.size())};
    const auto [run, adj] = el_tpbvp_solve(m, meas, Vec::Zero(2), Mat::Identity(2, 2));
    CHECK(run.xhat_T.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(adj.lambda.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(run.method == SmootherMethod::el_tpbvp);
    CHECK(!run.accuracy_warning);
}

TEST_CASE("tpbvp: terminal adjoint condition holds") {
    const IntegratorModel im(2, 1, 1);
    const auto m = build_companion(im);
    const TimeGrid grid(0.0, 1e-3, 20000);
    const auto truth = noiseless_signal(im, PolynomialDrift(1.0, 1), grid);
    const auto [run, adj] = el_tpbvp_solve(m, truth.y, Vec::Zero(2), Mat::Identity(2, 2));
    CHECK(adj.lambda.col(grid.steps).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("oracle equivalence: sweep vs tpbvp on noiseless polynomial inputs") {
    const std::pair<double, double> intensities[] = {{1.0, 1.0}, {2.0, 0.5}, {0.5, 1.5}};
    for (const auto& [sigma, rho] : intensities)
        for (int n = 1; n <= 3; ++n)
            for (int mm = 0; mm <= n; ++mm) {
                const IntegratorModel im(n, sigma, rho);
                const auto m = build_companion(im);
                const TimeGrid grid(0.0, 1e-3, 20000);
                const auto truth = noiseless_signal(im, PolynomialDrift(1.0, mm), grid);
                const auto filt = kalman_filter(m, schedule_for(m, grid), truth.y,
                                                Vec::Zero(n));
                const auto sm = sweep_smoother(m, filt);
                const auto [tp, adj] =
                    el_tpbvp_solve(m, truth.y, Vec::Zero(n), Mat::Identity(n, n));
                CHECK(scaled_first_component_gap(sm, tp, truth.x_true) < 1e-5);
            }
}

TEST_CASE("tpbvp adjoint matches the steady cascade: lambda1 ~ -2 a t") {
    const IntegratorModel im(1, 1, 1);
    const auto m = build_companion(im);
    const TimeGrid grid(0.0, 1e-3, 40000);
    const double a = 1.0;
    const auto truth = noiseless_signal(im, PolynomialDrift(a, 1), grid);
    const auto [run, adj] = el_tpbvp_solve(m, truth.y, Vec::Zero(1), Mat::Identity(1, 1));
    double worst = 0.0;
    for (std::size_t i = grid.steps / 4; i <= 3 * (grid.steps / 4); ++i) {
        const double t = grid.time(i);
        worst = std::max(worst, std::abs(adj.lambda(0, i) + 2.0 * a * t) / (2.0 * a * t));
    }
    CHECK(worst < 1e-2);
}

TEST_CASE("linearity of the smoothing pipeline in the measurements") {
    std::mt19937_64 gen(11);
    std::normal_distribution<double> normal;
    for (int n = 1; n <= 3; ++n) {
        const auto m = build_companion(IntegratorModel(n, 1, 1));
        const TimeGrid grid(0.0, 1e-2, 400);
        const auto sched = schedule_for(m, grid);
        const auto respond = [&](const Mat& y) {
            const auto filt =
                kalman_filter(m, sched, MeasurementSeries{grid, y}, Vec::Zero(n));
            return sweep_smoother(m, filt).xhat_T;
        };
        for (int rep = 0; rep < 3; ++rep) {
            Mat y1(1, grid.size()), y2(1, grid.size());
            for (std::size_t i = 0; i < grid.size(); ++i) {
                y1(0, i) = normal(gen);
                y2(0, i) = normal(gen);
            }
            const Mat sum_resp = respond(y1 + y2);
            const Mat resp_sum = respond(y1) + respond(y2);
            CHECK((sum_resp - resp_sum).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
}

TEST_CASE("reverse signs: filter error and backward increment oppose") {
    const IntegratorModel im(1, 1, 1);
    const auto m = build_companion(im);
    const TimeGrid grid(0.0, 1e-3, 40000);
    const auto truth = noiseless_signal(im, PolynomialDrift(1.0, 0), grid);
    const auto filt = kalman_filter(m, schedule_for(m, grid), truth.y, Vec::Zero(1));
    const auto sm = sweep_smoother(m, filt);
    double ef = 0.0, inc = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = grid.steps / 5; i <= 4 * (grid.steps / 5); ++i, ++cnt) {
        ef += filt.xhat(0, i) - truth.x_true(0, i);
        inc += sm.xhat_T(0, i) - filt.xhat(0, i);
    }
    CHECK(ef / static_cast<double>(cnt) < 0.0);
    CHECK(inc / static_cast<double>(cnt) > 0.0);
}

TEST_CASE("grid mismatch and divergence are reported") {
    const auto m = build_companion(IntegratorModel(1, 1, 1));
    const TimeGrid g1(0.0, 1e-2, 100), g2(0.0, 1e-2, 101);
    MeasurementSeries meas{g2, Mat::Zero(1, g2.size())};
    CHECK_THROWS_AS(kalman_filter(m, schedule_for(m, g1), meas, Vec::Zero(1)),
                    GridMismatchError);
}

TEST_CASE("filter divergence reports the failing node") {
    const auto m = build_companion(IntegratorModel(1, 1, 1));
    const TimeGrid grid(0.0, 1e-2, 50);
    auto sched = integrate_riccati(m, Mat::Identity(1, 1), grid);
    for (auto& K : sched.K) K(0, 0) = 1e308;  // doctored gain overflows the update
    auto shared = std::make_shared<const CovarianceSchedule>(std::move(sched));
    MeasurementSeries meas{grid, Mat::Constant(1, grid.size(), 1.0)};
    CHECK_THROWS_AS(kalman_filter(m, shared, meas, Vec::Zero(1)), IntegrationDivergedError);
}

TEST_CASE("sweep rejects an ill-conditioned covariance node") {
    const auto m = build_companion(IntegratorModel(2, 1, 1));
    const TimeGrid grid(0.0, 1e-2, 20);
    auto sched = integrate_riccati(m, Mat::Identity(2, 2), grid);
    Mat bad(2, 2);
    bad << 1.0, 0.0, 0.0, 1e-14;
    sched.P[10] = bad;
    auto shared = std::make_shared<const CovarianceSchedule>(std::move(sched));
    MeasurementSeries meas{grid, Mat::Zero(1, grid.size())};
    const auto filt = kalman_filter(m, shared, meas, Vec::Zero(2));
    CHECK_THROWS_AS(sweep_smoother(m, filt), SingularCovarianceError);
    try {
        sweep_smoother(m, filt);
    } catch (const SingularCovarianceError& e) {
        CHECK(e.node == 10);
    }
}

}  // TEST_SUITE
