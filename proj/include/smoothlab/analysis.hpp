#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

#include "smoothlab/estimators.hpp"
#include "smoothlab/kernels.hpp"
#include "smoothlab/signals.hpp"
#include "smoothlab/statespace.hpp"

namespace smoothlab {

enum class Regime { Zero, Constant, Unbounded };
enum class Subject { filter, smoother };

// Closed-form steady-state-error classification of the first error
// component for the polynomial-drift family.
struct SsePrediction {
    Regime regime;
    std::optional<double> value;  // present iff Constant
    Subject subject;
};

// Open-loop transfer function of the filter feedback loop:
//   (k1 S^(n-1) + ... + kn) / S^n,  a type-n loop.
struct TransferFunction {
    std::vector<double> numerator;  // k1..kn
    int type_order = 0;             // = n
};

struct ErrorSeries {
    TimeGrid grid;
    Mat e;  // n x (steps+1), estimate - truth
    Subject subject;
};

enum class VerdictRegime { Zero, Constant, Unbounded, Undetermined };

struct SteadyStateVerdict {
    VerdictRegime regime;
    std::optional<double> value;  // window mean, Constant verdicts
    std::pair<std::size_t, std::size_t> window;
};

// Steady-state prediction for the error of a filter or smoother designed
// for the n-th order model, fed the drift a t^m/m!:
//   smoother: Zero for m<n, Constant (-1)^(n+1) a (rho/sigma)^2 for m=n,
//             Unbounded for m>n
//   filter:   Constant -a/kn for m=0, Unbounded for m>0
//   a = 0:    Zero for both.
// Gains are required for the filter constant (final value theorem).
SsePrediction predict_sse(int n, int m, double a, double sigma, double rho, Subject subject,
                          const std::optional<TransferFunction>& gains = std::nullopt);

// Steady gain vector k = P_inf h / rho^2 of the converged schedule.
TransferFunction loop_transfer(const CovarianceSchedule& schedule, const IntegratorModel& model);

struct FinalValueResult {
    Regime regime;
    std::optional<double> value;  // estimate - truth convention, -a/kn
};

// lim s E(s) for the unity-feedback loop with open loop G(S) and input
// a t^(p-1)/(p-1)!: zero for p <= n, constant for p = n+1, unbounded
// beyond.
FinalValueResult final_value_error(const TransferFunction& tf, double a, int p);

ErrorSeries error_series(const FilterRun& run, const SignalRun& truth);
ErrorSeries error_series(const SmootherRun& run, const SignalRun& truth);

// Empirical regime detector on the first error component.  Smoother
// subjects read the centered window [f T, (1-f) T] (boundary layers at
// both ends), filter subjects the trailing window [(1-f) T, T].
//   Zero      |window mean| <= 1e-3 * T * slope_tol and flat
//   Constant  least-squares slope below slope_tol, mean beyond the band
//   Unbounded last-quarter max |e1| above magnitude_cap and last-quarter
//             slope above 10 * slope_tol
SteadyStateVerdict classify_steady_state(const ErrorSeries& series, double window_fraction,
                                         double slope_tol, double magnitude_cap);

// Roots of S^n + k1 S^(n-1) + ... + kn (the closed-loop poles).
std::vector<std::complex<double>> loop_poles(const TransferFunction& tf);

// Default experiment horizon: 40 time constants of the slowest pole.
double default_horizon(const TransferFunction& tf);

struct MonteCarloStats {
    TimeGrid grid;
    std::vector<double> mean_filter, var_filter;
    std::vector<double> mean_smoother, var_smoother;
    std::size_t paths = 0;
};

// Seeded experiments sharing one covariance schedule; per-node mean and
// unbiased sample variance of the first error component for both
// estimators.  Path p draws from seed+p unless explicit per-path seeds
// are supplied (test hook).
MonteCarloStats monte_carlo_variance(const IntegratorModel& model, const PolynomialDrift& drift,
                                     const TimeGrid& grid, std::size_t paths, std::uint64_t seed,
                                     kernels::Engine engine = kernels::best_engine(),
                                     const std::vector<std::uint64_t>* explicit_seeds = nullptr);

}  // namespace smoothlab
