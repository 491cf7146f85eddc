// Spin-J operators, the static LMG Hamiltonian and its spectrum.
//
// Basis ordering is m = -J, -J+1, ..., J (index i = m + J), so the parity
// operator exp(i*pi*(Jz - J)) is the diagonal (-1)^i with no branch ambiguity.

#pragma once

#include <Eigen/Dense>

#include <complex>
#include <cstddef>
#include <vector>

namespace spinrat {

// Spin size stored as 2J so half-integers are exact.
class SpinSize {
public:
    constexpr SpinSize() = default;
    // Throws InvalidParameter unless 2J is a positive integer.
    static SpinSize from_double(double J);
    static SpinSize from_twice(int twoJ);

    constexpr int twice() const noexcept { return twoJ_; }
    constexpr double value() const noexcept { return 0.5 * twoJ_; }
    constexpr std::size_t dimension() const noexcept { return static_cast<std::size_t>(twoJ_) + 1; }
    constexpr double hbar_eff() const noexcept { return 2.0 / twoJ_; }

    friend constexpr bool operator==(SpinSize, SpinSize) = default;

private:
    constexpr explicit SpinSize(int twoJ) : twoJ_(twoJ) {}
    int twoJ_ = 2;
};

// Static part of the Hamiltonian: H0 = omega0*Jz + gamma_x/(2J-1) * Jx^2.
struct Coupling {
    double omega0 = 1.0;
    double gamma_x = -0.95;
};

struct Drive {
    double tau = 8.0;
    double epsilon = 0.0;
};

struct ModelParams {
    SpinSize J = SpinSize::from_twice(2);
    Coupling h0;
    Drive drive;
    int r = 1;
    int s = 1;

    double hbar_eff() const noexcept { return J.hbar_eff(); }
    void validate() const;
};

struct SpinOperators {
    SpinSize J;
    Eigen::VectorXd jz_diag;  // m = -J..J
    Eigen::MatrixXd jx;       // real symmetric tridiagonal

    std::size_t dimension() const noexcept { return J.dimension(); }
    Eigen::MatrixXd jz() const { return jz_diag.asDiagonal(); }
    // Jy = (i/2)(J- - J+), purely imaginary in this basis.
    Eigen::MatrixXcd jy() const;
};

SpinOperators build_spin_matrices(SpinSize J);

// Throws InvalidParameter for J = 1/2, where 2J - 1 vanishes.
Eigen::MatrixXd build_h0(const SpinOperators& ops, const Coupling& c);

// Entries exp(i*pi*(m + J)) = +1, -1, +1, ... in the m-ordered basis.
Eigen::VectorXd parity_diagonal(const SpinOperators& ops);

struct StaticSpectrum {
    SpinSize J;
    Coupling h0;
    Eigen::VectorXd energies;  // ascending
    Eigen::MatrixXd states;    // columns |E_k> in the Jz basis
    std::vector<int> parities; // +1 / -1

    std::size_t size() const noexcept { return static_cast<std::size_t>(energies.size()); }
};

inline constexpr double kParityTol = 1e-8;
inline constexpr double kDegeneracyGuard = 1e-12;

// Diagonalizes H0 and labels each level by the sign of <E_k|Pi|E_k>.
// Throws Degeneracy when a gap falls below 1e-12*|E_max| or a parity
// expectation is not within 1e-8 of +-1.
// J is inferred from the matrix dimension; `coupling` is recorded as the
// cache key only.
StaticSpectrum build_static_spectrum(const Eigen::MatrixXd& h0,
                                     const Eigen::VectorXd& parity,
                                     Coupling coupling = {});

// Convenience: operators, H0 and spectrum in one call.
StaticSpectrum compute_static_spectrum(SpinSize J, const Coupling& c);

// 2*pi / (E_{k+r} - E_k).
double quantum_period(const StaticSpectrum& spec, std::size_t k, int r);

// argmin_k |E_k/J - E_R|; ties go to the smaller k.
std::size_t select_resonant_index(const StaticSpectrum& spec, double E_R);

// The resonant pair is (k_R - r, k_R): the partner sits r levels below the
// reference level. Returns s * 2*pi / (E_{k_R} - E_{k_R - r}).
double calibrate_tau(const StaticSpectrum& spec, std::size_t k_R, int r, int s);

struct ResonanceSpec {
    int r = 1;
    int s = 1;
    double E_R = 0.0;
    std::size_t k_R = 0;
    double tau_q = 0.0;

    std::size_t lower() const noexcept { return k_R - static_cast<std::size_t>(r); }
    std::size_t upper() const noexcept { return k_R; }
};

ResonanceSpec make_resonance(const StaticSpectrum& spec, int r, int s, double E_R);

// |<E_a| Jx |E_b>|.
double jx_matrix_element(const StaticSpectrum& spec, const SpinOperators& ops,
                         std::size_t a, std::size_t b);

// Bloch coherent state pointing along (sqrt(1-z^2) cos phi, sqrt(1-z^2) sin phi, z).
Eigen::VectorXcd spin_coherent_state(SpinSize J, double phi, double z);

struct SpinExpectation {
    double jx = 0.0;
    double jy = 0.0;
    double jz = 0.0;
};

SpinExpectation expectation(const SpinOperators& ops, const Eigen::VectorXcd& psi);

// exp(-i*theta*Jx), assembled from the spectral decomposition of Jx.
Eigen::MatrixXcd rotation_about_x(const SpinOperators& ops, double theta);

}  // namespace spinrat
