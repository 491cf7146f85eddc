#include "spinrat/floquet.hpp"

#include "spinrat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#ifdef SPINRAT_HAVE_LAPACKE
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>
#endif

namespace spinrat {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kUnitarityTol = 1e-10;
constexpr double kModulusTol = 1e-8;

bool is_diagonal(const Eigen::MatrixXcd& U) {
    for (Eigen::Index j = 0; j < U.cols(); ++j) {
        for (Eigen::Index i = 0; i < U.rows(); ++i) {
            if (i != j && U(i, j) != std::complex<double>(0.0, 0.0)) return false;
        }
    }
    return true;
}

// Complex Schur form U = Z T Z^dagger. For a unitary U, T is diagonal to
// rounding and the Schur vectors are its orthonormal eigenvectors, which
// stays well conditioned for the nearly degenerate resonant pair.
void schur(const Eigen::MatrixXcd& U, Eigen::VectorXcd& eigenvalues, Eigen::MatrixXcd& vectors) {
#ifdef SPINRAT_HAVE_LAPACKE
    const auto n = static_cast<lapack_int>(U.rows());
    Eigen::MatrixXcd T = U;
    vectors.resize(n, n);
    eigenvalues.resize(n);
    lapack_int sdim = 0;
    const lapack_int info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, T.data(), n, &sdim,
                                          eigenvalues.data(), vectors.data(), n);
    if (info != 0) {
        std::ostringstream os;
        os << "zgees failed with info=" << info;
        fail(ErrorKind::ContractViolation, os.str());
    }
#else
    Eigen::ComplexSchur<Eigen::MatrixXcd> cs(U, true);
    if (cs.info() != Eigen::Success) fail(ErrorKind::ContractViolation, "complex Schur decomposition failed");
    eigenvalues = cs.matrixT().diagonal();
    vectors = cs.matrixU();
#endif
}

}  // namespace

double unitarity_defect(const Eigen::MatrixXcd& U) {
    const Eigen::MatrixXcd G = U.adjoint() * U - Eigen::MatrixXcd::Identity(U.rows(), U.cols());
    return G.cwiseAbs().maxCoeff();
}

double fold_phase(double phi) {
    double f = std::fmod(phi, kTwoPi);
    if (f < 0.0) f += kTwoPi;
    return f >= kTwoPi ? 0.0 : f;
}

double circular_distance(double a, double b) {
    const double d = std::abs(fold_phase(a) - fold_phase(b));
    return std::min(d, kTwoPi - d);
}

FloquetOperator build_floquet(const StaticSpectrum& spec, const SpinOperators& ops, double tau, double epsilon) {
    if (!(tau >= 0.0) || !(epsilon >= 0.0)) fail(ErrorKind::InvalidParameter, "build_floquet needs tau >= 0, epsilon >= 0");
    const auto n = static_cast<Eigen::Index>(spec.size());
    if (static_cast<std::size_t>(n) != ops.dimension()) {
        fail(ErrorKind::InvalidParameter, "spectrum and spin operators have different dimensions");
    }

    FloquetOperator F;
    F.tau = tau;
    F.epsilon = epsilon;
    if (epsilon == 0.0) {
        F.U = Eigen::MatrixXcd::Zero(n, n);
    } else {
        // Kick in the H0 eigenbasis: V^T W diag(exp(-i eps lambda)) W^T V with
        // Jx = W diag(lambda) W^T, all of V, W real.
        Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
        Eigen::VectorXd sub(n - 1);
        for (Eigen::Index i = 0; i + 1 < n; ++i) sub(i) = ops.jx(i + 1, i);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
        if (es.info() != Eigen::Success) fail(ErrorKind::ContractViolation, "Jx diagonalization failed");
        const Eigen::MatrixXd Q = spec.states.transpose() * es.eigenvectors();
        const Eigen::ArrayXd angle = -epsilon * es.eigenvalues().array();
        const Eigen::MatrixXd re = Q * angle.cos().matrix().asDiagonal() * Q.transpose();
        const Eigen::MatrixXd im = Q * angle.sin().matrix().asDiagonal() * Q.transpose();
        F.U.resize(n, n);
        F.U.real() = re;
        F.U.imag() = im;
    }
    for (Eigen::Index k = 0; k < n; ++k) {
        const std::complex<double> phase = std::polar(1.0, -tau * spec.energies(k));
        if (epsilon == 0.0) {
            F.U(k, k) = phase;
        } else {
            F.U.row(k) *= phase;
        }
    }
    return F;
}

QuasiSpectrum diagonalize_floquet(const FloquetOperator& F) {
    const double defect = unitarity_defect(F.U);
    if (!(defect < kUnitarityTol)) {
        std::ostringstream os;
        os << "Floquet operator is not unitary (defect " << defect << ")";
        fail(ErrorKind::ContractViolation, os.str());
    }
    const Eigen::Index n = F.U.rows();
    QuasiSpectrum qs;
    Eigen::VectorXcd lambda;
    if (is_diagonal(F.U)) {
        lambda = F.U.diagonal();
        qs.states = Eigen::MatrixXcd::Identity(n, n);
    } else {
        schur(F.U, lambda, qs.states);
    }
    qs.phases.resize(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const double modulus = std::abs(lambda(k));
        if (std::abs(modulus - 1.0) > kModulusTol) {
            std::ostringstream os;
            os << "Floquet eigenvalue " << k << " has modulus " << modulus;
            fail(ErrorKind::ContractViolation, os.str());
        }
        qs.phases(k) = fold_phase(-std::arg(lambda(k)));
    }
    return qs;
}

ResonantPair identify_resonant_pair(const QuasiSpectrum& qs, const StaticSpectrum& spec, std::size_t k, int r,
                                    double tau, const PairOptions& opts, const ResonantPair* previous) {
    if (r < 1 || k + static_cast<std::size_t>(r) >= qs.size()) {
        std::ostringstream os;
        os << "pair (" << k << ", " << k << "+" << r << ") outside a spectrum of size " << qs.size();
        fail(ErrorKind::Bounds, os.str());
    }
    if (qs.size() != spec.size()) fail(ErrorKind::InvalidParameter, "quasi-spectrum and static spectrum sizes differ");
    const bool continuation = opts.tracking == PairTracking::Continuation;
    if (continuation && (previous == nullptr || previous->state_a.size() != qs.states.rows())) {
        fail(ErrorKind::InvalidParameter, "continuation tracking needs the pair found at the previous epsilon");
    }

    const Eigen::Index n = qs.states.cols();
    Eigen::VectorXd weight(n);
    if (continuation) {
        const Eigen::RowVectorXcd pa = previous->state_a.adjoint() * qs.states;
        const Eigen::RowVectorXcd pb = previous->state_b.adjoint() * qs.states;
        weight = (pa.cwiseAbs2() + pb.cwiseAbs2()).transpose();
    } else {
        const auto ka = static_cast<Eigen::Index>(k);
        const auto kb = static_cast<Eigen::Index>(k + static_cast<std::size_t>(r));
        weight = (qs.states.row(ka).cwiseAbs2() + qs.states.row(kb).cwiseAbs2()).transpose();
    }

    Eigen::Index a = 0;
    weight.maxCoeff(&a);
    Eigen::Index b = a == 0 ? 1 : 0;
    for (Eigen::Index j = 0; j < n; ++j) {
        if (j != a && weight(j) > weight(b)) b = j;
    }
    if (weight(b) < opts.overlap_floor) {
        std::ostringstream os;
        os << "resonant pair lost: weights " << weight(a) << ", " << weight(b) << " (floor " << opts.overlap_floor
           << ")";
        fail(ErrorKind::TrackingLost, os.str());
    }

    ResonantPair pair;
    pair.idx_a = a;
    pair.idx_b = b;
    pair.overlap_a = weight(a);
    pair.overlap_b = weight(b);
    pair.phi_a = qs.phases(a);
    pair.phi_b = qs.phases(b);
    pair.tracking = opts.tracking;
    pair.state_a = qs.states.col(a);
    pair.state_b = qs.states.col(b);
    const Splitting sp = quasienergy_splitting(pair.phi_a, pair.phi_b, spec.J, tau);
    pair.delta_phi = sp.delta_phi;
    pair.scaled = sp.scaled;
    return pair;
}

double reduced_splitting(double delta_phi, int r) {
    if (r < 1) fail(ErrorKind::InvalidParameter, "reduced_splitting needs r >= 1");
    const double period = kTwoPi / r;
    const double f = std::fmod(std::abs(delta_phi), period);
    return std::min(f, period - f);
}

Splitting quasienergy_splitting(double phi_a, double phi_b, SpinSize J, double tau) {
    Splitting s;
    s.delta_phi = circular_distance(phi_a, phi_b);
    s.scaled = tau > 0.0 ? J.hbar_eff() * s.delta_phi / tau : 0.0;
    return s;
}

Splitting quasienergy_splitting(const ResonantPair& pair, SpinSize J, double tau) {
    return quasienergy_splitting(pair.phi_a, pair.phi_b, J, tau);
}

}  // namespace spinrat
