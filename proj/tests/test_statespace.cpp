#include "doctest.h"
#include "smoothlab/statespace.hpp"

#include <stdexcept>

using namespace smoothlab;

TEST_SUITE("statespace") {

TEST_CASE("companion form, scalar case") {
    const auto m = build_companion(IntegratorModel(1, 1.0, 1.0));
    CHECK(m.A(0, 0) == 0.0);
    CHECK(m.G(0, 0) == 1.0);
    CHECK(m.H(0, 0) == 1.0);
    CHECK(m.B(0, 0) == 1.0);
}

TEST_CASE("companion form, n=2 and n=3 structure") {
    const auto m2 = build_companion(IntegratorModel(2, 1.0, 1.0));
    Mat expect(2, 2);
    expect << 0, 1, 0, 0;
    CHECK((m2.A.array() == expect.array()).all());
    CHECK(m2.G(0, 0) == 0.0);
    CHECK(m2.G(1, 0) == 1.0);
    CHECK(m2.H(0, 0) == 1.0);
    CHECK(m2.H(0, 1) == 0.0);

    const auto m3 = build_companion(IntegratorModel(3, 2.0, 0.5));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            CHECK(m3.A(i, j) == ((j == i + 1) ? 1.0 : 0.0));
    CHECK(m3.G(2, 0) == 2.0);
    CHECK(m3.B(0, 0) == 0.5);
}

TEST_CASE("companion A is nilpotent, A^n = 0") {
    for (int n = 1; n <= 6; ++n) {
        const auto m = build_companion(IntegratorModel(n, 1.0, 1.0));
        Mat power = Mat::Identity(n, n);
        for (int k = 0; k < n; ++k) power = m.A * power;
        CHECK(power.cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("h^T A^k b chain hits only k = n-1") {
    for (int n = 1; n <= 6; ++n) {
        const auto m = build_companion(IntegratorModel(n, 1.0, 1.0));
        const Mat b = m.G;  // sigma = 1, so G = b
        Mat Ak = Mat::Identity(n, n);
        for (int k = 0; k < n; ++k) {
            const double v = (m.H * Ak * b)(0, 0);
            CHECK(v == (k == n - 1 ? 1.0 : 0.0));
            Ak = m.A * Ak;
        }
    }
}

TEST_CASE("grid_times") {
    CHECK(grid_times(TimeGrid(0.0, 0.5, 2)) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(grid_times(TimeGrid(1.0, 0.25, 4)) ==
          std::vector<double>{1.0, 1.25, 1.5, 1.75, 2.0});

    const auto t = grid_times(TimeGrid(0.0, 1e-3, 1000));
    REQUIRE(t.size() == 1001);
    CHECK(t.back() == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t i = 1; i < t.size(); ++i)
        CHECK(t[i] - t[i - 1] == doctest::Approx(1e-3).epsilon(1e-12));
}

TEST_CASE("invalid parameters rejected") {
    CHECK_THROWS_AS(IntegratorModel(0, 1.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(IntegratorModel(1, 0.0, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(IntegratorModel(1, 1.0, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid(0.0, 0.0, 10), std::invalid_argument);
    CHECK_THROWS_AS(TimeGrid(0.0, 0.1, 0), std::invalid_argument);
    // B*B^T must be SPD
    CHECK_THROWS_AS(GeneralLinearModel(Mat::Zero(1, 1), Mat::Ones(1, 1), Mat::Ones(1, 1),
                                       Mat::Zero(1, 1)),
                    std::invalid_argument);
}

}  // TEST_SUITE
