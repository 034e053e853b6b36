#include <cstddef>
#include <stdexcept>
#include <vector>

#include "smoothlab/kernels.hpp"

namespace smoothlab::kernels::detail {

namespace {
constexpr int kMaxOrder = 8;
}

// Reference implementation of the batched Heun filter + backward sweep
// for the companion model with x^(0) = 0.  Lane arithmetic matches the
// AVX2 variant operation for operation.
void filter_smoother_block_scalar(const CompanionCoeffs& c, const double* y,
                                  const double* truth1, double* const e1f[kLanes],
                                  double* const e1s[kLanes]) {
    const int n = c.n;
    if (n < 1 || n > kMaxOrder)
        throw std::invalid_argument("filter_smoother_block: order out of range");
    const std::size_t nodes = c.nodes;
    const double dt = c.dt;
    const double half_dt = 0.5 * dt;

    std::vector<double> xf(nodes * static_cast<std::size_t>(n) * kLanes);
    const auto at = [n](std::size_t node, int j, int lane) {
        return (node * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)) * kLanes +
               static_cast<std::size_t>(lane);
    };

    for (int lane = 0; lane < kLanes; ++lane) {
        double x[kMaxOrder] = {0.0};
        for (int j = 0; j < n; ++j) xf[at(0, j, lane)] = 0.0;
        e1f[lane][0] = x[0] - truth1[0 * kLanes + lane];

        for (std::size_t i = 0; i + 1 < nodes; ++i) {
            const double* k0 = &c.gain[i * static_cast<std::size_t>(n)];
            const double* k1 = &c.gain[(i + 1) * static_cast<std::size_t>(n)];
            const double innov1 = y[i * kLanes + lane] - x[0];
            double f1[kMaxOrder], xp[kMaxOrder];
            for (int j = 0; j < n; ++j) {
                f1[j] = (j + 1 < n ? x[j + 1] : 0.0) + k0[j] * innov1;
                xp[j] = x[j] + dt * f1[j];
            }
            const double innov2 = y[(i + 1) * kLanes + lane] - xp[0];
            for (int j = 0; j < n; ++j) {
                const double f2 = (j + 1 < n ? xp[j + 1] : 0.0) + k1[j] * innov2;
                x[j] += half_dt * (f1[j] + f2);
            }
            for (int j = 0; j < n; ++j) xf[at(i + 1, j, lane)] = x[j];
            e1f[lane][i + 1] = x[0] - truth1[(i + 1) * kLanes + lane];
        }

        // Backward sweep from z(T) = x^(T).
        double z[kMaxOrder];
        for (int j = 0; j < n; ++j) z[j] = xf[at(nodes - 1, j, lane)];
        e1s[lane][nodes - 1] = z[0] - truth1[(nodes - 1) * kLanes + lane];
        for (std::size_t ii = nodes - 1; ii-- > 0;) {
            const double* c1 = &c.corr[(ii + 1) * static_cast<std::size_t>(n)];
            const double* c0 = &c.corr[ii * static_cast<std::size_t>(n)];
            double d1 = 0.0;
            for (int j = 0; j < n; ++j) d1 += c1[j] * (z[j] - xf[at(ii + 1, j, lane)]);
            double g1[kMaxOrder], zp[kMaxOrder];
            for (int j = 0; j < n; ++j) {
                g1[j] = (j + 1 < n ? z[j + 1] : d1);
                zp[j] = z[j] - dt * g1[j];
            }
            double d2 = 0.0;
            for (int j = 0; j < n; ++j) d2 += c0[j] * (zp[j] - xf[at(ii, j, lane)]);
            for (int j = 0; j < n; ++j) {
                const double g2 = (j + 1 < n ? zp[j + 1] : d2);
                z[j] -= half_dt * (g1[j] + g2);
            }
            e1s[lane][ii] = z[0] - truth1[ii * kLanes + lane];
        }
    }
}

void welford_add_scalar(double* mean, double* m2, const double* values, std::size_t nodes,
                        double count) {
    for (std::size_t i = 0; i < nodes; ++i) {
        const double delta = values[i] - mean[i];
        mean[i] += delta / count;
        m2[i] += delta * (values[i] - mean[i]);
    }
}

}  // namespace smoothlab::kernels::detail
