// Sweeps over (J, epsilon) joining the quantum splitting with the RAT and
// harmonic predictions, and log-log fits of the scaling laws.
//
// All splitting columns are in scaled units hbar_eff * delta_phi / tau:
// RAT predicts 2|K|, the harmonic oscillator hbar_eff * r * sqrt(2|K|/m).

#pragma once

#include "spinrat/floquet.hpp"
#include "spinrat/resonance.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spinrat {

struct PowerLawFit {
    double slope = 0.0;
    double intercept = 0.0;  // natural log
    double residual_rms = 0.0;
    std::size_t n_points = 0;

    PowerLaw law() const;
};

// OLS on (ln x, ln y). Throws Domain for non-positive data and InvalidFit for
// fewer than 4 points or degenerate x.
PowerLawFit loglog_fit(std::span<const double> x, std::span<const double> y);

// Classical columns at one epsilon; J-independent.
struct ClassicalPoint {
    double epsilon = 0.0;
    std::optional<PendulumParams> pendulum;  // absent when extraction failed
    std::optional<double> trace;             // monodromy trace, absent when no stable point
    double area = 0.0;                       // S+ - S-
    std::string status = "ok";
};

struct SplittingRow {
    double epsilon = 0.0;
    std::optional<double> quantum_scaled;
    std::optional<double> delta_phi;
    std::optional<double> delta_phi_reduced;
    std::optional<double> rat;   // 2|K|
    std::optional<double> harm;  // hbar r sqrt(2|K|/m), from the monodromy trace
    std::optional<double> area;  // S+ - S-
    double overlap_a = 0.0;
    double overlap_b = 0.0;
    std::string status = "ok";  // "ok" or a '+'-joined list of error kinds
};

struct SplittingCurve {
    SpinSize J;
    int r = 1;
    int s = 1;
    double tau_q = 0.0;
    std::size_t k_R = 0;
    std::vector<SplittingRow> rows;
    std::optional<double> epsilon_max_estimate;  // from the fitted K(eps) and mean m
    std::optional<double> epsilon_max_crossing;  // RAT/harmonic columns crossing
};

struct ResonanceTemplate {
    int r = 1;
    int s = 1;
    double E_R = -0.723276;
};

struct SweepOptions {
    Coupling h0;
    ClassicalParams classical;  // drive is overwritten per point
    ExtractionOptions extraction;
    PairOptions pair;
    unsigned workers = 1;
};

// Logarithmic grid with `per_decade` points per decade, both ends included.
std::vector<double> log_grid(double lo, double hi, int per_decade);

// Classical pipeline at tau = s T(E_R) / r for each epsilon. Failures are
// recorded in ClassicalPoint::status.
std::vector<ClassicalPoint> classical_sweep(std::span<const double> eps_grid, const ResonanceTemplate& res,
                                            const SweepOptions& opts);

// One quantum sweep per J joined with the shared classical columns.
std::vector<SplittingCurve> sweep_splitting(std::span<const SpinSize> J_list, std::span<const double> eps_grid,
                                            const ResonanceTemplate& res, const SweepOptions& opts);

// Same join with the classical columns precomputed for eps_grid.
SplittingCurve quantum_sweep(SpinSize J, std::span<const double> eps_grid, const ResonanceTemplate& res,
                             std::span<const ClassicalPoint> classical, const SweepOptions& opts);
SplittingCurve quantum_sweep(const StaticSpectrum& spec, std::span<const double> eps_grid, const ResonanceTemplate& res,
                             std::span<const ClassicalPoint> classical, const SweepOptions& opts);

// Fit of K(eps) over the classical points with a pendulum.
PowerLawFit fit_coupling(std::span<const ClassicalPoint> points);
PowerLawFit fit_area(std::span<const ClassicalPoint> points);
double mean_mass(std::span<const ClassicalPoint> points);

// epsilon_max from the K fit inverted at hbar = 1/J.
double epsilon_max_estimate(const PowerLawFit& K_fit, double m, int r, SpinSize J);

// Fills both epsilon_max fields of each curve; logs a diagnostic when they
// differ by more than 50%.
void estimate_epsilon_max(std::span<SplittingCurve> curves, std::span<const ClassicalPoint> classical);

// Fit of epsilon_max against J. Throws InvalidFit with fewer than 4 estimates.
PowerLawFit scaling_epsilon_max(std::span<const double> J, std::span<const double> eps_max);
PowerLawFit scaling_epsilon_max(std::span<const SplittingCurve> curves);

// Runs fn(i) for i in [0, n) on up to `workers` threads. Exceptions from fn
// are rethrown after all threads finish.
template <class Fn>
void parallel_for(std::size_t n, unsigned workers, Fn&& fn);

}  // namespace spinrat

#include "spinrat/detail/parallel.hpp"
