// Floquet operator F = exp(-i tau H0) exp(-i eps Jx), its quasienergies, and
// the quasienergy splitting of a resonant pair of H0 levels.
//
// F is stored in the H0 eigenbasis of the StaticSpectrum it was built from:
// the first factor is then diagonal and the ε = 0 operator is exactly
// diagonal. Rotate with spec.states to get the Jz-basis matrix.

#pragma once

#include "spinrat/quantum_core.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <optional>

namespace spinrat {

struct FloquetOperator {
    Eigen::MatrixXcd U;  // H0 eigenbasis
    double tau = 0.0;
    double epsilon = 0.0;

    std::size_t dimension() const noexcept { return static_cast<std::size_t>(U.rows()); }
};

struct QuasiSpectrum {
    Eigen::VectorXd phases;   // phi_k in [0, 2 pi), eigenvalue exp(-i phi_k)
    Eigen::MatrixXcd states;  // orthonormal columns, H0 eigenbasis

    std::size_t size() const noexcept { return static_cast<std::size_t>(phases.size()); }
};

// Which reference subspace selects the pair.
enum class PairTracking {
    Projection,    // span{|E_k>, |E_{k+r}>}
    Continuation,  // span of the pair found at the previous epsilon
};

struct ResonantPair {
    Eigen::Index idx_a = 0;
    Eigen::Index idx_b = 0;
    double overlap_a = 0.0;  // weight on the reference subspace, overlap_a >= overlap_b
    double overlap_b = 0.0;
    double phi_a = 0.0;
    double phi_b = 0.0;
    double delta_phi = 0.0;  // circular distance in [0, pi]
    double scaled = 0.0;     // hbar_eff * delta_phi / tau
    PairTracking tracking = PairTracking::Projection;
    Eigen::VectorXcd state_a;
    Eigen::VectorXcd state_b;
};

struct PairOptions {
    double overlap_floor = 0.5;
    PairTracking tracking = PairTracking::Projection;
};

struct Splitting {
    double delta_phi = 0.0;
    double scaled = 0.0;
};

// Max |(A^dagger A - I)_ij|.
double unitarity_defect(const Eigen::MatrixXcd& U);

// Phases folded into [0, 2 pi) and compared on the circle.
double fold_phase(double phi);
double circular_distance(double a, double b);

FloquetOperator build_floquet(const StaticSpectrum& spec, const SpinOperators& ops, double tau, double epsilon);

// Throws ContractViolation when U is not unitary to 1e-10 or an eigenvalue
// leaves the unit circle by more than 1e-8.
QuasiSpectrum diagonalize_floquet(const FloquetOperator& F);

// Selects the two Floquet states of largest weight on the reference
// subspace. Continuation needs `previous`; with Projection it is ignored.
// Throws TrackingLost when the second weight is below overlap_floor.
ResonantPair identify_resonant_pair(const QuasiSpectrum& qs, const StaticSpectrum& spec, std::size_t k, int r,
                                    double tau, const PairOptions& opts = {},
                                    const ResonantPair* previous = nullptr);

// Distance of delta_phi to the nearest multiple of 2 pi / r. Floquet states
// of an r-island chain come in multiplets spaced by 2 pi / r, so a tracked
// state can be replaced by a multiplet partner; the island level spacing is
// only defined modulo 2 pi / r.
double reduced_splitting(double delta_phi, int r);

Splitting quasienergy_splitting(const ResonantPair& pair, SpinSize J, double tau);
Splitting quasienergy_splitting(double phi_a, double phi_b, SpinSize J, double tau);

}  // namespace spinrat
