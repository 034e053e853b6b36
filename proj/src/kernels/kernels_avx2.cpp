#if defined(__x86_64__) || defined(__i386__)

#include <cstddef>
#include <immintrin.h>
#include <stdexcept>
#include <vector>

#include "smoothlab/kernels.hpp"

namespace smoothlab::kernels::detail {

namespace {
constexpr int kMaxOrder = 8;
}

// Four paths per vector, lane = path.  Mirrors the scalar reference
// operation for operation (mul+add, no fused contractions) so the two
// engines stay numerically interchangeable.
void filter_smoother_block_avx2(
    const CompanionCoeffs& c, const double* y, const double* truth1,
    double* const e1f[kLanes], double* const e1s[kLanes]) {
    static_assert(kLanes == 4, "AVX2 kernel packs 4 doubles");
    const int n = c.n;
    if (n < 1 || n > kMaxOrder)
        throw std::invalid_argument("filter_smoother_block: order out of range");
    const std::size_t nodes = c.nodes;
    const __m256d dt = _mm256_set1_pd(c.dt);
    const __m256d half_dt = _mm256_set1_pd(0.5 * c.dt);

    std::vector<double> xf(nodes * static_cast<std::size_t>(n) * kLanes);
    const auto at = [n](std::size_t node, int j) {
        return (node * static_cast<std::size_t>(n) + static_cast<std::size_t>(j)) * kLanes;
    };
    alignas(32) double out[kLanes];
    const auto scatter = [&](double* const dst[kLanes], std::size_t node, __m256d v) {
        _mm256_store_pd(out, v);
        for (int l = 0; l < kLanes; ++l) dst[l][node] = out[l];
    };

    __m256d x[kMaxOrder], f1[kMaxOrder], xp[kMaxOrder];
    for (int j = 0; j < n; ++j) {
        x[j] = _mm256_setzero_pd();
        _mm256_storeu_pd(&xf[at(0, j)], x[j]);
    }
    scatter(e1f, 0, _mm256_sub_pd(x[0], _mm256_loadu_pd(&truth1[0])));

    for (std::size_t i = 0; i + 1 < nodes; ++i) {
        const double* k0 = &c.gain[i * static_cast<std::size_t>(n)];
        const double* k1 = &c.gain[(i + 1) * static_cast<std::size_t>(n)];
        const __m256d innov1 = _mm256_sub_pd(_mm256_loadu_pd(&y[i * kLanes]), x[0]);
        for (int j = 0; j < n; ++j) {
            const __m256d shift = (j + 1 < n) ? x[j + 1] : _mm256_setzero_pd();
            f1[j] = _mm256_add_pd(shift, _mm256_mul_pd(_mm256_set1_pd(k0[j]), innov1));
            xp[j] = _mm256_add_pd(x[j], _mm256_mul_pd(dt, f1[j]));
        }
        const __m256d innov2 = _mm256_sub_pd(_mm256_loadu_pd(&y[(i + 1) * kLanes]), xp[0]);
        for (int j = 0; j < n; ++j) {
            const __m256d shift = (j + 1 < n) ? xp[j + 1] : _mm256_setzero_pd();
            const __m256d f2 =
                _mm256_add_pd(shift, _mm256_mul_pd(_mm256_set1_pd(k1[j]), innov2));
            x[j] = _mm256_add_pd(x[j], _mm256_mul_pd(half_dt, _mm256_add_pd(f1[j], f2)));
        }
        for (int j = 0; j < n; ++j) _mm256_storeu_pd(&xf[at(i + 1, j)], x[j]);
        scatter(e1f, i + 1,
                _mm256_sub_pd(x[0], _mm256_loadu_pd(&truth1[(i + 1) * kLanes])));
    }

    __m256d z[kMaxOrder], g1[kMaxOrder], zp[kMaxOrder];
    for (int j = 0; j < n; ++j) z[j] = _mm256_loadu_pd(&xf[at(nodes - 1, j)]);
    scatter(e1s, nodes - 1,
            _mm256_sub_pd(z[0], _mm256_loadu_pd(&truth1[(nodes - 1) * kLanes])));
    for (std::size_t ii = nodes - 1; ii-- > 0;) {
        const double* c1 = &c.corr[(ii + 1) * static_cast<std::size_t>(n)];
        const double* c0 = &c.corr[ii * static_cast<std::size_t>(n)];
        __m256d d1 = _mm256_setzero_pd();
        for (int j = 0; j < n; ++j)
            d1 = _mm256_add_pd(
                d1, _mm256_mul_pd(_mm256_set1_pd(c1[j]),
                                  _mm256_sub_pd(z[j], _mm256_loadu_pd(&xf[at(ii + 1, j)]))));
        for (int j = 0; j < n; ++j) {
            g1[j] = (j + 1 < n) ? z[j + 1] : d1;
            zp[j] = _mm256_sub_pd(z[j], _mm256_mul_pd(dt, g1[j]));
        }
        __m256d d2 = _mm256_setzero_pd();
        for (int j = 0; j < n; ++j)
            d2 = _mm256_add_pd(
                d2, _mm256_mul_pd(_mm256_set1_pd(c0[j]),
                                  _mm256_sub_pd(zp[j], _mm256_loadu_pd(&xf[at(ii, j)]))));
        for (int j = 0; j < n; ++j) {
            const __m256d g2 = (j + 1 < n) ? zp[j + 1] : d2;
            z[j] = _mm256_sub_pd(z[j], _mm256_mul_pd(half_dt, _mm256_add_pd(g1[j], g2)));
        }
        scatter(e1s, ii, _mm256_sub_pd(z[0], _mm256_loadu_pd(&truth1[ii * kLanes])));
    }
}

void welford_add_avx2(double* mean, double* m2,
                                                      const double* values, std::size_t nodes,
                                                      double count) {
    const __m256d cnt = _mm256_set1_pd(count);
    std::size_t i = 0;
    for (; i + 4 <= nodes; i += 4) {
        const __m256d v = _mm256_loadu_pd(values + i);
        __m256d mu = _mm256_loadu_pd(mean + i);
        const __m256d delta = _mm256_sub_pd(v, mu);
        mu = _mm256_add_pd(mu, _mm256_div_pd(delta, cnt));
        const __m256d em2 = _mm256_add_pd(_mm256_loadu_pd(m2 + i),
                                          _mm256_mul_pd(delta, _mm256_sub_pd(v, mu)));
        _mm256_storeu_pd(mean + i, mu);
        _mm256_storeu_pd(m2 + i, em2);
    }
    for (; i < nodes; ++i) {
        const double delta = values[i] - mean[i];
        mean[i] += delta / count;
        m2[i] += delta * (values[i] - mean[i]);
    }
}

}  // namespace smoothlab::kernels::detail

#endif  // x86
