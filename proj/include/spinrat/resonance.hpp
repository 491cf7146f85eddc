// Pendulum parameters of an r:s island chain from the classical
// stroboscopic map.
//
// Pipeline per drive strength:
//   1. Newton on P^r(x) - x locates the stable fixed point near the resonant torus.
//   2. The monodromy matrix there gives the island rotation angle arccos(tr M / 2).
//   3. A scan of the energy spread Delta H0 along a line through the island
//      brackets the separatrix; crossings are refined by bisection on a
//      libration/rotation classifier.
//   4. Orbits launched just outside the two crossings trace the separatrix
//      branches; the areas S+ and S- under them (baseline z = -1) follow.
//
// With a = (S+ - S-)/16 = sqrt(2 m K) and b = arccos(tr M/2)/(r^2 tau) = sqrt(2K/m):
// K = a b / 2, m = a / b, I = (S+ + S-)/(4 pi).

#pragma once

#include "spinrat/classical.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <numbers>
#include <span>
#include <vector>

namespace spinrat {

struct ExtractionOptions {
    double phi_line = std::numbers::pi;  // scan angle (through the island centre)
    bool phi_over_r = false;             // use phi = pi/r instead of phi_line
    std::size_t n_grid = 160;
    std::size_t n_iter = 2000;           // P^r iterates per scan point (minimum)
    double jump_factor = 5.0;            // jump threshold = factor * median |Delta(Delta H0)|
    double z_tol = 1e-8;
    double fixed_tol = 1e-8;
    double fd_step = 1e-6;
    double newton_tol = 1e-10;
    int newton_max_iter = 60;
    double branch_delta = 1e-5;
    int branch_retries = 4;
    std::size_t branch_iter = 40000;
    std::size_t n_bins = 1024;
    double min_coverage = 0.95;
    double window_factor = 3.0;          // scan half-width in units of the estimated island half-width
    double min_libration_periods = 12.0; // classifier budget in island rotation periods
};

struct SeparatrixScan {
    double phi_line = 0.0;
    int r = 1;
    std::vector<double> z_grid;
    std::vector<double> stddev;
    double jump_threshold = 0.0;
    double z_upper = 0.0;
    double z_lower = 0.0;
    double z_fixed = 0.0;
    PhasePoint fixed_point;
    std::size_t classify_iter = 0;
};

// OuterOrbits: branches traced by rotational orbits launched just outside the
// separatrix crossings. InnerTorus: envelope of the outermost librating torus,
// used when the outer orbits sit in a chaotic layer and cross the chain.
enum class BranchSource { OuterOrbits, InnerTorus };

struct IslandGeometry {
    BranchSource source = BranchSource::OuterOrbits;
    std::vector<PhasePoint> upper_branch;
    std::vector<PhasePoint> lower_branch;
    double S_plus = 0.0;
    double S_minus = 0.0;
    double coverage_upper = 0.0;
    double coverage_lower = 0.0;
    double delta_used = 0.0;
    std::vector<PhasePoint> fixed_points;  // one per island of the chain

    double area() const noexcept { return S_plus - S_minus; }
};

struct MonodromyResult {
    Eigen::Matrix2d M = Eigen::Matrix2d::Identity();
    double trace = 2.0;
    double det = 1.0;
    double fd_step = 0.0;
    double trace_halved = 2.0;  // trace recomputed with fd_step/2
};

struct PendulumParams {
    double I_rs = 0.0;
    double m_rs = 0.0;
    double K_rs = 0.0;
    int r = 1;
    int s = 1;
    double tau = 0.0;
    double epsilon = 0.0;
};

// sqrt(<H^2> - <H>^2) over the samples (two-pass form).
double energy_stddev(std::span<const double> energies);
double energy_stddev(const Trajectory& traj, const Coupling& c);

// Delta H0 of the orbit of P^r started at p, over n_iter iterates.
double orbit_energy_stddev(const PhasePoint& p, int r, std::size_t n_iter, const ClassicalParams& params);

// Newton on G(x) = P^r(x) - x, Jacobian by central differences.
// Throws NotConverged when ||G|| >= newton_tol after newton_max_iter steps.
PhasePoint locate_fixed_point(const PhasePoint& approx, int r, const ClassicalParams& params,
                              const ExtractionOptions& opts = {});

enum class MonodromyCheck { Enforce, Skip };

// Central differences of P^r around fp. With Enforce: |det - 1| > 1e-6 throws
// StepSize, tr >= 2 throws UnstablePoint.
MonodromyResult monodromy(const PhasePoint& fp, int r, double fd_step, const ClassicalParams& params,
                          MonodromyCheck check = MonodromyCheck::Enforce);

// True when the P^r orbit from p stays within one island (its accumulated
// angular drift never reaches 2 pi / r within max_iter iterates).
bool librates(const PhasePoint& p, int r, std::size_t max_iter, const ClassicalParams& params);

SeparatrixScan scan_separatrix(double phi_line, double z_min, double z_max, std::size_t n_grid,
                               std::size_t n_iter, int r, const ClassicalParams& params,
                               const ExtractionOptions& opts = {});

IslandGeometry trace_separatrix_branches(const SeparatrixScan& scan, double delta, std::size_t n_iter,
                                         const ClassicalParams& params, const ExtractionOptions& opts = {});

// Area under a closed-in-phi branch, trapezoidal in phi with baseline z = -1.
double area_below(std::span<const PhasePoint> branch_sorted);

PendulumParams pendulum_params(const IslandGeometry& geom, const MonodromyResult& mono, int r, double tau);

// Same relations from the raw inputs (S+ - S-, S+ + S-, tr M).
PendulumParams pendulum_params(double area_diff, double area_sum, double trace, int r, double tau);

double pendulum_levels(const PendulumParams& pp, double hbar_eff, int n);

// 2 |K| tau / hbar_eff.
double rat_splitting(const PendulumParams& pp, double hbar_eff);

// r tau sqrt(2 |K| / m).
double harmonic_splitting(const PendulumParams& pp);

struct PowerLaw {
    double prefactor = 0.0;  // y = prefactor * x^exponent
    double exponent = 0.0;
    double operator()(double x) const;
};

// Solves 2 A eps^b = r^2 hbar^2 / m.
double epsilon_max(const PowerLaw& K_fit, double m_rs, int r, double hbar_eff);

// First crossing of the RAT and harmonic curves, log-log interpolated.
// Throws NotFound when rat - harm never changes sign.
double epsilon_max_crossing(std::span<const double> eps, std::span<const double> rat,
                            std::span<const double> harm);

// Effective mass from the H0 orbit family: 1/m = d omega/dI = omega * d omega/dE.
double mass_from_period(double E, const Coupling& c, double dE = 1e-5);

struct IslandExtraction {
    SeparatrixScan scan;
    IslandGeometry geometry;
    MonodromyResult mono;
    PendulumParams pendulum;
    double mass_estimate = 0.0;  // from the orbit family, no separatrix involved
};

// Full pipeline for one drive strength. `E_R` places the initial guess on the
// resonant torus; params.drive holds the classical (tau, epsilon).
IslandExtraction extract_island(double E_R, int r, int s, const ClassicalParams& params,
                                const ExtractionOptions& opts = {});

}  // namespace spinrat
