#include "doctest.h"
#include "smoothlab/signals.hpp"

#include <cmath>
#include <vector>

using namespace smoothlab;

TEST_SUITE("signals") {

TEST_CASE("noiseless closed forms") {
    const TimeGrid grid(0.0, 0.5, 8);

    SUBCASE("n=1, m=0: ramp t") {
        const auto s = noiseless_signal(IntegratorModel(1, 1, 1), PolynomialDrift(1.0, 0), grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            CHECK(s.x_true(0, i) == doctest::Approx(grid.time(i)).epsilon(1e-15));
            CHECK(s.y.y(0, i) == s.x_true(0, i));
        }
        CHECK(!s.seed.has_value());
    }
    SUBCASE("n=1, m=1: t^2/2") {
        const auto s = noiseless_signal(IntegratorModel(1, 1, 1), PolynomialDrift(1.0, 1), grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid.time(i);
            CHECK(s.x_true(0, i) == doctest::Approx(t * t / 2.0).epsilon(1e-15));
        }
    }
    SUBCASE("n=2, m=1, a=2: t^3/3 and derivative t^2") {
        const auto s = noiseless_signal(IntegratorModel(2, 1, 1), PolynomialDrift(2.0, 1), grid);
        for (std::size_t i = 0; i < grid.size(); ++i) {
            const double t = grid.time(i);
            CHECK(s.x_true(0, i) == doctest::Approx(t * t * t / 3.0).epsilon(1e-14));
            CHECK(s.x_true(1, i) == doctest::Approx(t * t).epsilon(1e-14));
        }
    }
}

TEST_CASE("noiseless signal satisfies the ODE (finite differences)") {
    // second central difference of the n=2 signal's last component
    // recovers the drift a t^m/m!
    const TimeGrid grid(0.0, 1e-2, 400);
    const double a = 1.5;
    const auto s = noiseless_signal(IntegratorModel(2, 1, 1), PolynomialDrift(a, 1), grid);
    for (std::size_t i = 1; i + 1 < grid.size(); i += 17) {
        const double d = (s.x_true(1, i + 1) - s.x_true(1, i - 1)) / (2.0 * grid.dt);
        CHECK(d == doctest::Approx(a * grid.time(i)).epsilon(1e-6).scale(1.0));
    }
}

TEST_CASE("same seed gives bit-identical runs") {
    const TimeGrid grid(0.0, 1e-2, 500);
    const IntegratorModel m(2, 1.0, 1.0);
    const PolynomialDrift d(0.7, 1);
    const auto s1 = stochastic_signal(m, d, grid, 123);
    const auto s2 = stochastic_signal(m, d, grid, 123);
    CHECK((s1.x_true.array() == s2.x_true.array()).all());
    CHECK((s1.y.y.array() == s2.y.y.array()).all());
    CHECK(s1.seed == 123);
    const auto s3 = stochastic_signal(m, d, grid, 124);
    CHECK(!(s1.y.y.array() == s3.y.y.array()).all());
}

TEST_CASE("drift decomposition is exact superposition") {
    const TimeGrid grid(0.0, 1e-2, 1000);
    const IntegratorModel m(2, 1.0, 1.0);
    const auto with_drift = stochastic_signal(m, PolynomialDrift(2.0, 1), grid, 99);
    const auto zero_drift = stochastic_signal(m, PolynomialDrift(0.0, 1), grid, 99);
    const auto pure = noiseless_signal(m, PolynomialDrift(2.0, 1), grid);
    const double scale = pure.x_true.cwiseAbs().maxCoeff() +
                         zero_drift.x_true.cwiseAbs().maxCoeff() + 1.0;
    CHECK(((with_drift.x_true - zero_drift.x_true) - pure.x_true).cwiseAbs().maxCoeff() <
          1e-12 * scale);
}

TEST_CASE("Brownian motion statistics at T") {
    // n=1, a=0: x~(T) is sigma * W(T); check mean and variance over paths.
    const TimeGrid grid(0.0, 1e-3, 1000);  // T = 1
    const IntegratorModel m(1, 1.0, 1.0);
    const PolynomialDrift d(0.0, 0);
    const int paths = 2000;
    double sum = 0.0, sumsq = 0.0;
    for (int p = 0; p < paths; ++p) {
        const auto s = stochastic_signal(m, d, grid, 5000 + static_cast<std::uint64_t>(p));
        const double xT = s.x_true(0, grid.steps);
        sum += xT;
        sumsq += xT * xT;
    }
    const double mean = sum / paths;
    const double var = (sumsq - paths * mean * mean) / (paths - 1);
    CHECK(std::abs(mean) < 3.0 / std::sqrt(static_cast<double>(paths)) * 1.5);
    CHECK(var == doctest::Approx(1.0).epsilon(0.10));
}

TEST_CASE("measurement noise carries the 1/sqrt(dt) scaling") {
    const TimeGrid grid(0.0, 1e-3, 20000);
    const IntegratorModel m(1, 1.0, 2.0);  // rho = 2
    const auto s = stochastic_signal(m, PolynomialDrift(0.0, 0), grid, 7);
    double sumsq = 0.0;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double r = (s.y.y(0, i) - s.x_true(0, i)) * std::sqrt(grid.dt);
        sumsq += r * r;
    }
    const double var = sumsq / static_cast<double>(grid.size());
    CHECK(var == doctest::Approx(4.0).epsilon(0.10));
}

}  // TEST_SUITE
