// Classical limit of the kicked LMG model on the Bloch sphere.
//
// Canonical pair (phi, z) with {phi, z} = 1; Cartesian spin components
// jx = sqrt(1-z^2) cos(phi), jy = sqrt(1-z^2) sin(phi), jz = z.
//
//   H0(phi, z) = omega0*z + (1 - z^2)/2 * gamma_x * cos^2(phi)
//
// Between kicks the flow of H0 is integrated numerically; the kick is a rigid
// rotation by epsilon about the x axis.

#pragma once

#include "spinrat/quantum_core.hpp"

#include <cstddef>
#include <span>
#include <vector>

namespace spinrat {

struct PhasePoint {
    double phi = 0.0;  // [0, 2*pi)
    double z = 0.0;    // [-1, 1]
    bool at_pole = false;
};

// Where the stroboscopic section sits within one drive period.
//   AfterKick : flow for tau, then kick          (x -> K(Phi(x)))
//   BeforeKick: kick, then flow for tau          (Floquet operator order)
//   Symmetric : half kick, flow for tau, half kick
// All three are conjugate to each other. Only Symmetric is reversible under
// phi -> -phi, which places symmetric fixed points exactly on phi = 0, pi.
enum class Section { AfterKick, BeforeKick, Symmetric };

// Quadrature inverts the time-of-flight integral along the rotational orbit
// (exact energy conservation); points off that branch fall back to RungeKutta,
// the adaptive 7(8) Fehlberg integrator.
enum class FlowMethod { Quadrature, RungeKutta };

struct ClassicalParams {
    Coupling h0;
    Drive drive;
    Section section = Section::Symmetric;
    FlowMethod flow = FlowMethod::Quadrature;
    double local_tol = 1e-12;  // integrator absolute/relative step tolerance
    double drift_tol = 1e-10;  // allowed |H0 - H0(start)| over one flow segment
};

struct Trajectory {
    std::vector<double> times;
    std::vector<PhasePoint> points;
    double energy_drift = 0.0;
};

struct ClassicalResonance {
    int r = 1;
    int s = 1;
    double E_R = 0.0;
    double T_R = 0.0;
    double tau = 0.0;  // s*T_R/r
};

double wrap_angle(double phi) noexcept;           // -> [0, 2*pi)
double wrap_signed(double dphi) noexcept;         // -> (-pi, pi]

double classical_energy(const PhasePoint& p, const Coupling& c) noexcept;

struct PhaseVelocity {
    double dphi_dt = 0.0;
    double dz_dt = 0.0;
};

PhaseVelocity hamilton_rhs(const PhasePoint& p, const Coupling& c) noexcept;

// Adaptive integration of the H0 flow. Samples are the accepted integrator
// steps. Throws IntegrationAccuracy when the energy drift exceeds drift_tol.
Trajectory integrate_flow(const PhasePoint& p, double duration, const ClassicalParams& params);

// Final point only; `drift` receives the energy drift when non-null.
PhasePoint flow_point(const PhasePoint& p, double duration, const ClassicalParams& params,
                      double* drift = nullptr);

// Rotation by epsilon about x: jy' = jy cos e - jz sin e, jz' = jz cos e + jy sin e.
// This is the motion of <J>/J under exp(-i*epsilon*Jx).
PhasePoint apply_kick(const PhasePoint& p, double epsilon) noexcept;

PhasePoint stroboscopic_map(const PhasePoint& p, const ClassicalParams& params);
PhasePoint iterate_map(PhasePoint p, int n, const ClassicalParams& params);

std::vector<Trajectory> poincare_section(std::span<const PhasePoint> seeds, std::size_t n_iter,
                                         const ClassicalParams& params);

// T(E) = int_0^{2pi} dphi / sqrt(omega0^2 - 2 E Gamma(phi) + Gamma(phi)^2),
// Gamma(phi) = gamma_x cos^2(phi). Throws EnergyOutOfFamily when the orbit at
// energy E is not a rotation in phi.
double classical_period(double E, const Coupling& c, double quad_tol = 1e-13);

// z on the rotational orbit of energy E at angle phi (the branch continuous
// with E/omega0 as gamma_x -> 0).
double rotational_branch_z(double E, double phi, const Coupling& c);

// Root of T(E) = T_target. Throws NotFound when T - T_target never changes
// sign over the rotational family.
double find_resonant_energy(double T_target, const Coupling& c, double e_tol = 1e-12);

// Resonance on the orbit of period T_orbit: E_R solves T(E_R) = T_orbit and the
// kick period is tau = s*T(E_R)/r.
ClassicalResonance classical_resonance(double T_orbit, int r, int s, const Coupling& c);

}  // namespace spinrat
