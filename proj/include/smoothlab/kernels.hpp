#pragma once

#include <cstddef>
#include <vector>

#include "smoothlab/riccati.hpp"
#include "smoothlab/statespace.hpp"

namespace smoothlab::kernels {

// Monte Carlo inner loops: many independent paths share one gain
// schedule, so the truth/filter/sweep recursions are data-parallel
// across paths.  A scalar reference kernel and an AVX2 variant (4 paths
// per vector) implement identical arithmetic; the variant is selected
// at runtime and equivalence-tested against the reference.

enum class Engine { scalar, avx2 };

Engine best_engine();
bool engine_available(Engine engine);
const char* engine_name(Engine engine);

inline constexpr int kLanes = 4;  // paths per block

// Per-node coefficients of the companion-form estimators, flattened:
//   gain[i*n + j]: filter gain vector at node i
//   corr[i*n + c]: last row of GG^T P_i^-1 (its only nonzero row)
struct CompanionCoeffs {
    int n = 0;
    std::size_t nodes = 0;
    double dt = 0.0;
    std::vector<double> gain;
    std::vector<double> corr;
};

CompanionCoeffs make_companion_coeffs(const GeneralLinearModel& model,
                                      const CovarianceSchedule& schedule);

// Runs the Heun filter forward and the Heun sweep backward for one block
// of kLanes paths (x^(0) = 0).  Inputs are SoA: y[node*kLanes + lane].
// Outputs are per-path contiguous first-component error series,
// e1_filter[lane][node] = x^_1 - x~_1 and likewise for the smoother.
void run_filter_smoother_block(const CompanionCoeffs& coeffs, const double* y,
                               const double* truth1, double* const e1_filter[kLanes],
                               double* const e1_smoother[kLanes], Engine engine);

// Streaming per-node mean / unbiased variance over paths (Welford).
struct NodeStats {
    explicit NodeStats(std::size_t nodes) : mean(nodes, 0.0), m2(nodes, 0.0) {}

    void add_path(const double* values, Engine engine);
    double variance(std::size_t i) const {
        return count > 1 ? m2[i] / static_cast<double>(count - 1) : 0.0;
    }

    std::size_t count = 0;
    std::vector<double> mean;
    std::vector<double> m2;
};

namespace detail {
void filter_smoother_block_scalar(const CompanionCoeffs& c, const double* y,
                                  const double* truth1, double* const e1f[kLanes],
                                  double* const e1s[kLanes]);
void welford_add_scalar(double* mean, double* m2, const double* values, std::size_t nodes,
                        double count);
#if defined(__x86_64__) || defined(__i386__)
void filter_smoother_block_avx2(const CompanionCoeffs& c, const double* y,
                                const double* truth1, double* const e1f[kLanes],
                                double* const e1s[kLanes]);
void welford_add_avx2(double* mean, double* m2, const double* values, std::size_t nodes,
                      double count);
#endif
}  // namespace detail

}  // namespace smoothlab::kernels
