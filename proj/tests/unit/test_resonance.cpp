#include "spinrat/errors.hpp"
#include "spinrat/resonance.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <vector>

using namespace spinrat;
using std::numbers::pi;

namespace {

constexpr double kER = -0.723276;

ClassicalParams drive(int r, double eps) {
    ClassicalParams p;
    p.drive = Drive{classical_period(kER, Coupling{}) / r, eps};
    return p;
}

PhasePoint torus_guess(double phi) { return {phi, rotational_branch_z(kER, phi, Coupling{}), false}; }

ErrorKind kind_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no exception");
    return ErrorKind::InvalidParameter;
}

}  // namespace

TEST_CASE("energy spread") {
    const std::vector<double> two{0.7, -0.7, 0.7, -0.7};
    CHECK(energy_stddev(two) == doctest::Approx(0.7).epsilon(1e-15));
    const std::vector<double> flat(10, -0.3);
    CHECK(energy_stddev(flat) < 1e-16);

    // No kick: the map is the H0 flow, which conserves energy.
    CHECK(orbit_energy_stddev({1.0, -0.6}, 1, 200, drive(1, 0.0)) < 1e-10);

    const ClassicalParams p = drive(1, 0.01);
    const PhasePoint fp = locate_fixed_point(torus_guess(pi), 1, p);
    CHECK(orbit_energy_stddev(fp, 1, 200, p) < 1e-8);
}

TEST_CASE("1:1 fixed point sits on the symmetry line") {
    const ClassicalParams p = drive(1, 0.01);
    const PhasePoint fp = locate_fixed_point(torus_guess(pi), 1, p);
    CHECK(std::abs(fp.phi - pi) < 1e-6);
    const PhasePoint img = stroboscopic_map(fp, p);
    CHECK(std::hypot(wrap_signed(img.phi - fp.phi), img.z - fp.z) < 1e-6);

    // Weak driving: the fixed point approaches the resonant torus.
    const PhasePoint weak = locate_fixed_point(torus_guess(pi), 1, drive(1, 1e-5));
    const PhasePoint weaker = locate_fixed_point(torus_guess(pi), 1, drive(1, 1e-6));
    const double z_torus = torus_guess(pi).z;
    CHECK(std::abs(weaker.z - z_torus) < std::abs(weak.z - z_torus));
    CHECK(std::abs(weaker.z - z_torus) < 1e-3);
}

TEST_CASE("2:1 chain has period-2 points near phi = 0 and pi") {
    const ClassicalParams p = drive(2, 0.1);
    const PhasePoint a = locate_fixed_point(torus_guess(pi), 2, p);
    const PhasePoint b = stroboscopic_map(a, p);
    CHECK(std::abs(wrap_signed(a.phi - pi)) < 1e-6);
    CHECK(std::abs(wrap_signed(b.phi)) < 1e-6);
    const PhasePoint back = stroboscopic_map(b, p);
    CHECK(std::hypot(wrap_signed(back.phi - a.phi), back.z - a.z) < 1e-8);
    const MonodromyResult m = monodromy(a, 2, 1e-6, p);
    CHECK(m.trace < 2.0);
}

TEST_CASE("monodromy") {
    // Unperturbed resonant torus: parabolic shear.
    const MonodromyResult shear = monodromy(torus_guess(pi), 1, 1e-6, drive(1, 0.0), MonodromyCheck::Skip);
    CHECK(std::abs(shear.trace - 2.0) < 1e-4);

    const ClassicalParams p = drive(1, 0.01);
    const PhasePoint fp = locate_fixed_point(torus_guess(pi), 1, p);
    const MonodromyResult m = monodromy(fp, 1, 1e-6, p);
    CHECK(m.trace < 2.0);
    CHECK(std::abs(m.det - 1.0) < 1e-6);
    CHECK(std::abs(m.M.determinant() - 1.0) < 1e-6);
    CHECK(std::abs(m.trace - m.trace_halved) < 1e-5);
    const MonodromyResult half = monodromy(fp, 1, 5e-7, p);
    CHECK(std::abs(m.trace - half.trace) < 1e-5);
}

TEST_CASE("separatrix scan brackets the island") {
    const ClassicalParams p = drive(1, 0.01);
    const IslandExtraction ex = extract_island(kER, 1, 1, p);
    const SeparatrixScan& s = ex.scan;
    CHECK(s.z_lower < s.z_fixed);
    CHECK(s.z_fixed < s.z_upper);
    CHECK(std::abs(s.z_fixed - ex.scan.fixed_point.z) < 1e-12);
    CHECK(std::abs(s.fixed_point.phi - pi) < 1e-6);

    const SeparatrixScan fine = scan_separatrix(s.phi_line, s.z_grid.front(), s.z_grid.back(), 2 * s.z_grid.size(),
                                                s.classify_iter, 1, p);
    CHECK(std::abs(fine.z_upper - s.z_upper) < 2e-8);
    CHECK(std::abs(fine.z_lower - s.z_lower) < 2e-8);

    const auto no_island = [&] { scan_separatrix(pi, s.z_grid.front(), s.z_grid.back(), 160, 500, 1, drive(1, 0.0)); };
    CHECK(kind_of(no_island) == ErrorKind::IslandNotFound);
}

TEST_CASE("branch areas") {
    std::vector<PhasePoint> flat;
    for (int i = 0; i < 64; ++i) flat.push_back({2 * pi * i / 64, -0.5});
    CHECK(area_below(flat) == doctest::Approx(0.5 * 2 * pi).epsilon(1e-14));

    auto area = [](int r, double eps) { return extract_island(kER, r, 1, drive(r, eps)).geometry.area(); };
    const double a1 = area(1, 0.005), a4 = area(1, 0.02);
    CHECK(a4 / a1 == doctest::Approx(2.0).epsilon(0.1));
    const double b1 = area(2, 0.05), b2 = area(2, 0.1);
    CHECK(b2 / b1 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("pendulum parameters") {
    // b tau r^2 must stay below pi for arccos to invert the trace.
    const double a = 0.16, b = 0.5, tau = 4.0;
    const double trace = 2.0 * std::cos(b * tau);
    const PendulumParams pp = pendulum_params(16 * a, 4 * pi * 0.47, trace, 1, tau);
    CHECK(std::abs(pp.K_rs - 0.04) < 1e-12);
    CHECK(std::abs(pp.m_rs - 0.32) < 1e-12);
    CHECK(std::abs(pp.I_rs - 0.47) < 1e-12);
    CHECK(std::abs(std::sqrt(2 * pp.m_rs * pp.K_rs) - a) < 1e-12);
    CHECK(std::abs(std::sqrt(2 * pp.K_rs / pp.m_rs) - b) < 1e-12);

    const PendulumParams two = pendulum_params(16 * a, 1.0, 2.0 * std::cos(4 * 0.3 * 2.0), 2, 2.0);
    CHECK(std::abs(std::sqrt(2 * two.K_rs / two.m_rs) - 0.3) < 1e-12);
    CHECK(std::abs(std::sqrt(2 * two.m_rs * two.K_rs) - a) < 1e-12);

    CHECK(kind_of([&] { pendulum_params(0.0, 1.0, trace, 1, tau); }) == ErrorKind::DegenerateIsland);
    CHECK(kind_of([&] { pendulum_params(1.0, 1.0, 2.5, 1, tau); }) == ErrorKind::Domain);

    PendulumParams synth;
    synth.K_rs = 0.04;
    synth.m_rs = 0.32;
    synth.r = 1;
    synth.tau = 8.0;
    CHECK(harmonic_splitting(synth) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(rat_splitting(synth, 1.0 / 600) == doctest::Approx(2 * rat_splitting(synth, 1.0 / 300)).epsilon(1e-14));
    CHECK(rat_splitting(synth, 0.01) == doctest::Approx(2 * 0.04 * 8 / 0.01).epsilon(1e-14));
    synth.K_rs = 0.0;
    CHECK(harmonic_splitting(synth) == 0.0);
    CHECK(rat_splitting(synth, 0.01) == 0.0);
}

TEST_CASE("pendulum levels") {
    PendulumParams pp;
    pp.m_rs = 0.7;
    const double hbar = 0.01;
    pp.I_rs = hbar * 12.5;
    CHECK(pendulum_levels(pp, hbar, 12) == 0.0);
    CHECK(pendulum_levels(pp, hbar, 15) == doctest::Approx(pendulum_levels(pp, hbar, 9)).epsilon(1e-12));
    for (int r : {1, 2}) {
        pp.I_rs = hbar * (20 + 0.5 * (r + 1));
        CHECK(pendulum_levels(pp, hbar, 20) == doctest::Approx(pendulum_levels(pp, hbar, 20 + r)).epsilon(1e-12));
    }
    pp.m_rs = 0.0;
    CHECK_THROWS_AS(pendulum_levels(pp, hbar, 1), Error);
}

TEST_CASE("epsilon_max from a power law") {
    const PowerLaw lin{0.03, 1.0}, quad{0.01, 2.0};
    for (double J : {60.0, 150.0}) {
        const double h1 = 1 / J, h2 = 1 / (2 * J);
        CHECK(epsilon_max(lin, 1.5, 1, h1) / epsilon_max(lin, 1.5, 1, h2) == doctest::Approx(4.0).epsilon(1e-12));
        CHECK(epsilon_max(quad, 1.1, 2, h1) / epsilon_max(quad, 1.1, 2, h2) == doctest::Approx(2.0).epsilon(1e-12));
    }
    // At epsilon_max the RAT splitting 2K equals hbar r sqrt(2K/m).
    const double h = 1.0 / 300, m = 1.5;
    const double e = epsilon_max(lin, m, 1, h);
    const double K = lin(e);
    CHECK(2 * K == doctest::Approx(h * std::sqrt(2 * K / m)).epsilon(1e-12));

    const std::vector<double> eps{1, 2, 4, 8}, rat{1, 2, 4, 8}, harm{3, 3, 3, 3};
    CHECK(epsilon_max_crossing(eps, rat, harm) == doctest::Approx(3.0).epsilon(1e-12));
    const std::vector<double> never{10, 10, 10, 10};
    CHECK_THROWS_AS(epsilon_max_crossing(eps, rat, never), Error);
}

TEST_CASE("mass from the orbit family") {
    const double m = mass_from_period(kER, Coupling{});
    CHECK(m > 1.0);
    CHECK(m < 2.0);
}
