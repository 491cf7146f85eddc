#include "spinrat/errors.hpp"
#include "spinrat/floquet.hpp"
#include "spinrat/resonance.hpp"

#include "doctest.h"

#include <unsupported/Eigen/MatrixFunctions>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>

using namespace spinrat;
using std::numbers::pi;
using cd = std::complex<double>;

namespace {

// exp(-i tau H0) exp(-i eps Jx) in the Jz basis, from the matrix exponential.
Eigen::MatrixXcd product_oracle(SpinSize J, double tau, double eps) {
    auto ops = build_spin_matrices(J);
    const Eigen::MatrixXcd h0 = build_h0(ops, Coupling{}).cast<cd>();
    const Eigen::MatrixXcd jx = ops.jx.cast<cd>();
    return (cd(0, -tau) * h0).exp() * (cd(0, -eps) * jx).exp();
}

Eigen::MatrixXcd to_jz_basis(const FloquetOperator& F, const StaticSpectrum& spec) {
    const Eigen::MatrixXcd V = spec.states.cast<cd>();
    return V * F.U * V.adjoint();
}

}  // namespace

TEST_CASE("Floquet operator matches the exponential product") {
    const SpinSize J = SpinSize::from_double(5);
    auto spec = compute_static_spectrum(J, Coupling{});
    auto ops = build_spin_matrices(J);
    const FloquetOperator F = build_floquet(spec, ops, 1.0, 0.3);
    CHECK(unitarity_defect(F.U) < 1e-12);
    CHECK((to_jz_basis(F, spec) - product_oracle(J, 1.0, 0.3)).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("Floquet operator at epsilon = 0") {
    const SpinSize J = SpinSize::from_double(12);
    auto spec = compute_static_spectrum(J, Coupling{});
    auto ops = build_spin_matrices(J);

    const FloquetOperator id = build_floquet(spec, ops, 0.0, 0.0);
    CHECK((id.U - Eigen::MatrixXcd::Identity(25, 25)).cwiseAbs().maxCoeff() < 1e-14);

    const double tau = 2.7;
    const FloquetOperator F = build_floquet(spec, ops, tau, 0.0);
    Eigen::MatrixXcd off = F.U;
    off.diagonal().setZero();
    CHECK(off.cwiseAbs().maxCoeff() < 1e-14);

    const QuasiSpectrum qs = diagonalize_floquet(F);
    std::vector<double> got(qs.phases.data(), qs.phases.data() + qs.phases.size());
    std::vector<double> want;
    for (Eigen::Index k = 0; k < spec.energies.size(); ++k) want.push_back(fold_phase(tau * spec.energies(k)));
    std::sort(got.begin(), got.end());
    std::sort(want.begin(), want.end());
    for (std::size_t i = 0; i < got.size(); ++i) CHECK(circular_distance(got[i], want[i]) < 1e-10);
}

TEST_CASE("quasienergies: unitarity, eigenvectors and determinant phase") {
    const SpinSize J = SpinSize::from_double(5);
    auto spec = compute_static_spectrum(J, Coupling{});
    auto ops = build_spin_matrices(J);
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> eps_dist(0.01, 0.2);
    for (int trial = 0; trial < 5; ++trial) {
        const double eps = eps_dist(rng);
        const FloquetOperator F = build_floquet(spec, ops, 3.1, eps);
        CHECK(unitarity_defect(F.U) < 1e-10);
        const QuasiSpectrum qs = diagonalize_floquet(F);
        const Eigen::MatrixXcd& W = qs.states;
        CHECK((W.adjoint() * W - Eigen::MatrixXcd::Identity(11, 11)).cwiseAbs().maxCoeff() < 1e-10);
        Eigen::VectorXcd lambda(qs.size());
        for (Eigen::Index k = 0; k < lambda.size(); ++k) lambda(k) = std::polar(1.0, -qs.phases(k));
        CHECK((F.U * W - W * lambda.asDiagonal()).cwiseAbs().maxCoeff() < 1e-10);

        const cd det = product_oracle(J, 3.1, eps).determinant();
        CHECK(circular_distance(-qs.phases.sum(), std::arg(det)) < 1e-9);
    }
}

TEST_CASE("phase folding and splitting wrap-around") {
    CHECK(fold_phase(-0.1) == doctest::Approx(2 * pi - 0.1));
    CHECK(fold_phase(2 * pi) == 0.0);
    CHECK(circular_distance(0.1, 2 * pi - 0.1) == doctest::Approx(0.2).epsilon(1e-14));
    const Splitting s = quasienergy_splitting(0.1, 2 * pi - 0.1, SpinSize::from_double(50), 8.0);
    CHECK(s.delta_phi == doctest::Approx(0.2).epsilon(1e-14));
    CHECK(s.scaled == doctest::Approx(0.2 / 50 / 8).epsilon(1e-14));
    CHECK(reduced_splitting(pi - 0.01, 2) == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(reduced_splitting(0.3, 1) == doctest::Approx(0.3).epsilon(1e-14));
}

TEST_CASE("calibrated pair is degenerate at epsilon = 0") {
    for (double Jv : {30.0, 60.0}) {
        const SpinSize J = SpinSize::from_double(Jv);
        auto spec = compute_static_spectrum(J, Coupling{});
        auto ops = build_spin_matrices(J);
        for (int r : {1, 2}) {
            const ResonanceSpec res = make_resonance(spec, r, 1, -0.723276);
            const QuasiSpectrum qs = diagonalize_floquet(build_floquet(spec, ops, res.tau_q, 0.0));
            const ResonantPair pair = identify_resonant_pair(qs, spec, res.lower(), r, res.tau_q);
            CHECK(pair.overlap_a == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(pair.overlap_b == doctest::Approx(1.0).epsilon(1e-12));
            CHECK(pair.delta_phi < 1e-10);
            CHECK(quasienergy_splitting(pair, J, res.tau_q).scaled < 1e-10);
        }
    }
}

TEST_CASE("small epsilon selects the symmetric and antisymmetric combinations") {
    const SpinSize J = SpinSize::from_double(30);
    auto spec = compute_static_spectrum(J, Coupling{});
    auto ops = build_spin_matrices(J);
    const ResonanceSpec res = make_resonance(spec, 1, 1, -0.723276);
    const QuasiSpectrum qs = diagonalize_floquet(build_floquet(spec, ops, res.tau_q, 1e-4));
    const ResonantPair pair = identify_resonant_pair(qs, spec, res.lower(), 1, res.tau_q);
    CHECK(pair.overlap_a + pair.overlap_b > 1.9);
    const auto a = static_cast<Eigen::Index>(res.lower());
    for (const Eigen::VectorXcd* v : {&pair.state_a, &pair.state_b}) {
        // Two-level mixing of a degenerate pair: equal weights on both levels.
        CHECK(std::norm((*v)(a)) == doctest::Approx(0.5).epsilon(0.05));
        CHECK(std::norm((*v)(a + 1)) == doctest::Approx(0.5).epsilon(0.05));
    }
    // First-order splitting of the degenerate pair: eps |<E_a|Jx|E_b>|.
    const double me = jx_matrix_element(spec, ops, res.lower(), res.upper());
    CHECK(pair.delta_phi == doctest::Approx(2e-4 * me).epsilon(0.05));
}

TEST_CASE("pair tracking is lost at strong driving") {
    const SpinSize J = SpinSize::from_double(30);
    auto spec = compute_static_spectrum(J, Coupling{});
    auto ops = build_spin_matrices(J);
    const ResonanceSpec res = make_resonance(spec, 1, 1, -0.723276);
    const QuasiSpectrum qs = diagonalize_floquet(build_floquet(spec, ops, res.tau_q, 1.5));
    CHECK_THROWS_AS(identify_resonant_pair(qs, spec, res.lower(), 1, res.tau_q), Error);
    try {
        identify_resonant_pair(qs, spec, res.lower(), 1, res.tau_q);
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::TrackingLost);
    }
}

TEST_CASE("small-epsilon splitting agrees with the RAT prediction at J = 60") {
    const SpinSize J = SpinSize::from_double(60);
    auto spec = compute_static_spectrum(J, Coupling{});
    auto ops = build_spin_matrices(J);
    const ResonanceSpec res = make_resonance(spec, 1, 1, -0.723276);
    const double eps = 2e-4;
    const QuasiSpectrum qs = diagonalize_floquet(build_floquet(spec, ops, res.tau_q, eps));
    const ResonantPair pair = identify_resonant_pair(qs, spec, res.lower(), 1, res.tau_q);

    ClassicalParams p;
    p.drive = Drive{classical_period(-0.723276, Coupling{}), eps};
    const IslandExtraction ex = extract_island(-0.723276, 1, 1, p);
    const double rat = 2 * std::abs(ex.pendulum.K_rs);
    CHECK(std::abs(pair.scaled - rat) / rat < 0.2);
}
