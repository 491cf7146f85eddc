#include "spinrat/classical.hpp"
#include "spinrat/errors.hpp"
#include "spinrat/resonance.hpp"

#include "doctest.h"

#include <cmath>
#include <numbers>
#include <random>

using namespace spinrat;
using std::numbers::pi;

namespace {

constexpr double kER = -0.723276;

double distance(const PhasePoint& a, const PhasePoint& b) {
    return std::hypot(wrap_signed(a.phi - b.phi), a.z - b.z);
}

ClassicalParams params_with(double tau, double eps, FlowMethod flow = FlowMethod::Quadrature) {
    ClassicalParams p;
    p.drive = Drive{tau, eps};
    p.flow = flow;
    return p;
}

}  // namespace

TEST_CASE("classical energy") {
    const Coupling c;
    CHECK(classical_energy({0.3, -1.0}, c) == doctest::Approx(-1.0));
    CHECK(classical_energy({2.1, -1.0}, c) == doctest::Approx(-1.0));
    CHECK(classical_energy({pi / 2, 0.37}, c) == doctest::Approx(0.37).epsilon(1e-14));
    CHECK(classical_energy({0.0, 0.0}, c) == doctest::Approx(-0.475).epsilon(1e-14));
}

TEST_CASE("Hamilton equations") {
    const Coupling c;
    CHECK(hamilton_rhs({1.0, 1.0}, c).dz_dt == 0.0);
    CHECK(hamilton_rhs({1.0, -1.0}, c).dz_dt == 0.0);
    const auto free = hamilton_rhs({0.4, 0.2}, Coupling{1.0, 0.0});
    CHECK(free.dphi_dt == doctest::Approx(1.0));
    CHECK(free.dz_dt == 0.0);

    // phi' = dH/dz, z' = -dH/dphi by central differences.
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> phi(0, 2 * pi), z(-0.99, 0.99);
    const double h = 1e-6;
    double worst = 0.0;
    for (int i = 0; i < 100; ++i) {
        const PhasePoint p{phi(rng), z(rng)};
        const double dHdz = (classical_energy({p.phi, p.z + h}, c) - classical_energy({p.phi, p.z - h}, c)) / (2 * h);
        const double dHdphi =
            (classical_energy({p.phi + h, p.z}, c) - classical_energy({p.phi - h, p.z}, c)) / (2 * h);
        const auto v = hamilton_rhs(p, c);
        worst = std::max({worst, std::abs(v.dphi_dt - dHdz), std::abs(v.dz_dt + dHdphi)});
    }
    CHECK(worst < 1e-8);
}

TEST_CASE("free flow is a uniform rotation") {
    ClassicalParams p = params_with(0, 0, FlowMethod::RungeKutta);
    p.h0 = Coupling{1.0, 0.0};
    const PhasePoint x{0.7, -0.3};
    CHECK(distance(flow_point(x, 2 * pi, p), x) < 1e-9);
}

TEST_CASE("the resonant torus closes after one period") {
    const Coupling c;
    const double E = find_resonant_energy(8.0, c);
    const PhasePoint x{pi, rotational_branch_z(E, pi, c)};
    CHECK(classical_energy(x, c) == doctest::Approx(E).epsilon(1e-12));
    for (auto flow : {FlowMethod::Quadrature, FlowMethod::RungeKutta}) {
        CHECK(distance(flow_point(x, 8.0, params_with(0, 0, flow)), x) < 1e-6);
    }
}

TEST_CASE("energy drift over long flows") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<double> phi(0, 2 * pi), z(-0.95, 0.95);
    for (auto flow : {FlowMethod::Quadrature, FlowMethod::RungeKutta}) {
        for (int i = 0; i < 10; ++i) {
            const PhasePoint x{phi(rng), z(rng)};
            double drift = 1.0;
            flow_point(x, 50.0, params_with(0, 0, flow), &drift);
            CHECK(drift < 1e-10);
        }
    }
    const Trajectory t = integrate_flow({1.0, 0.1}, 50.0, params_with(0, 0, FlowMethod::RungeKutta));
    CHECK(t.energy_drift < 1e-10);
    CHECK(t.points.size() == t.times.size());
    CHECK(t.times.back() == doctest::Approx(50.0));
}

TEST_CASE("kick is the rotation of a spin coherent state") {
    CHECK(distance(apply_kick({1.2, 0.3}, 0.0), {1.2, 0.3}) == 0.0);
    CHECK(distance(apply_kick({0.0, 0.0}, 0.8), {0.0, 0.0}) < 1e-15);

    const PhasePoint up = apply_kick({pi / 2, 0.0}, pi / 2);
    CHECK(up.z == doctest::Approx(1.0));
    CHECK(up.at_pole);
    CHECK(up.phi == 0.0);

    auto quantum = [](SpinSize J, const PhasePoint& x, double eps) {
        const auto ops = build_spin_matrices(J);
        const Eigen::VectorXcd psi = rotation_about_x(ops, eps) * spin_coherent_state(J, x.phi, x.z);
        return expectation(ops, psi);
    };
    const auto q20 = quantum(SpinSize::from_double(20), {pi / 2, 0.0}, pi / 2);
    CHECK(q20.jz / 20 == doctest::Approx(1.0).epsilon(1e-10));

    std::mt19937 rng(5);
    std::uniform_real_distribution<double> phi(0, 2 * pi), z(-0.9, 0.9), eps(0.0, 0.3);
    const SpinSize J = SpinSize::from_double(100);
    for (int i = 0; i < 10; ++i) {
        const PhasePoint x{phi(rng), z(rng)};
        const double e = eps(rng);
        const PhasePoint k = apply_kick(x, e);
        const auto q = quantum(J, x, e);
        const double rho = std::sqrt(1 - k.z * k.z);
        CHECK(std::abs(q.jx / 100 - rho * std::cos(k.phi)) < 0.05);
        CHECK(std::abs(q.jy / 100 - rho * std::sin(k.phi)) < 0.05);
        CHECK(std::abs(q.jz / 100 - k.z) < 0.05);
    }
}

TEST_CASE("stroboscopic map") {
    const PhasePoint x{2.0, -0.5};
    const ClassicalParams p = params_with(3.0, 0.0);
    CHECK(distance(stroboscopic_map(x, p), flow_point(x, 3.0, p)) < 1e-12);

    // Section orderings are conjugate: K_{e/2} P_sym = P_after K_{e/2}.
    ClassicalParams sym = params_with(8.0, 0.05), after = sym;
    after.section = Section::AfterKick;
    const PhasePoint lhs = apply_kick(stroboscopic_map(x, sym), 0.025);
    const PhasePoint rhs = stroboscopic_map(apply_kick(x, 0.025), after);
    CHECK(distance(lhs, rhs) < 1e-10);
    CHECK(distance(iterate_map(x, 3, sym), stroboscopic_map(stroboscopic_map(stroboscopic_map(x, sym), sym), sym)) <
          1e-14);
}

TEST_CASE("stroboscopic map preserves area") {
    std::mt19937 rng(19);
    std::uniform_real_distribution<double> phi(0, 2 * pi), z(-0.9, 0.2);
    const double h = 1e-6;
    for (double eps : {0.01, 0.1}) {
        const ClassicalParams p = params_with(8.0, eps);
        for (int i = 0; i < 6; ++i) {
            const PhasePoint x{phi(rng), z(rng)};
            Eigen::Matrix2d M;
            for (int c = 0; c < 2; ++c) {
                PhasePoint a = x, b = x;
                (c == 0 ? a.phi : a.z) += h;
                (c == 0 ? b.phi : b.z) -= h;
                const PhasePoint fa = stroboscopic_map(a, p), fb = stroboscopic_map(b, p);
                M(0, c) = wrap_signed(fa.phi - fb.phi) / (2 * h);
                M(1, c) = (fa.z - fb.z) / (2 * h);
            }
            CHECK(M.determinant() == doctest::Approx(1.0).epsilon(1e-6));
        }
    }
}

TEST_CASE("Poincare section") {
    const Coupling c;
    // Unperturbed seeds on one contour stay on it.
    const double E = -0.6;
    std::vector<PhasePoint> seeds{{0.0, rotational_branch_z(E, 0.0, c)}, {2.0, rotational_branch_z(E, 2.0, c)}};
    for (const auto& t : poincare_section(seeds, 50, params_with(8.0, 0.0))) {
        CHECK(t.points.size() == 51);
        for (const auto& x : t.points) CHECK(std::abs(classical_energy(x, c) - E) < 1e-9);
    }

    // An interior seed of the 1:1 island librates around phi = pi.
    const ClassicalParams p = params_with(classical_period(kER, c), 0.005);
    const PhasePoint centre = locate_fixed_point({pi, rotational_branch_z(kER, pi, c)}, 1, p);
    const auto traj = poincare_section(std::vector<PhasePoint>{{centre.phi, centre.z + 0.002}}, 300, p);
    double max_dev = 0.0;
    for (const auto& x : traj[0].points) max_dev = std::max(max_dev, std::abs(wrap_signed(x.phi - pi)));
    CHECK(max_dev < 1.0);

    CHECK_THROWS_AS(poincare_section(std::vector<PhasePoint>{{0.0, 1.5}}, 5, p), Error);
    CHECK(poincare_section(std::vector<PhasePoint>{}, 5, p).empty());
}

TEST_CASE("orbit period") {
    CHECK(classical_period(0.3, Coupling{1.0, 0.0}) == doctest::Approx(2 * pi).epsilon(1e-13));
    CHECK(classical_period(kER, Coupling{}) == doctest::Approx(8.0).epsilon(1e-3 / 8));
    CHECK_THROWS_AS(classical_period(-1.2, Coupling{}), Error);

    // Return time of the phi angle along an integrated orbit.
    const Coupling c;
    const ClassicalParams rk = params_with(0, 0, FlowMethod::RungeKutta);
    for (double E : {-0.85, -0.723276, -0.5}) {
        const PhasePoint x{0.4, rotational_branch_z(E, 0.4, c)};
        const double T = classical_period(E, c);
        auto offset = [&](double t) { return wrap_signed(flow_point(x, t, rk).phi - x.phi); };
        double lo = 0.95 * T, hi = 1.05 * T;
        REQUIRE(offset(lo) * offset(hi) < 0);
        for (int i = 0; i < 60; ++i) {
            const double mid = 0.5 * (lo + hi);
            (offset(lo) * offset(mid) <= 0 ? hi : lo) = mid;
        }
        CHECK(std::abs(0.5 * (lo + hi) - T) < 1e-5);
    }
}

TEST_CASE("resonant energy") {
    const Coupling c;
    CHECK(find_resonant_energy(8.0, c) == doctest::Approx(kER).epsilon(1e-5 / 0.723276));
    CHECK_THROWS_AS(find_resonant_energy(8.0, Coupling{1.0, 0.0}), Error);
    for (double E : {-0.85, -0.75, -0.65}) {
        CHECK(std::abs(find_resonant_energy(classical_period(E, c), c) - E) < 1e-7);
    }
    const ClassicalResonance res = classical_resonance(8.0, 2, 1, c);
    CHECK(res.tau == doctest::Approx(4.0));
}
