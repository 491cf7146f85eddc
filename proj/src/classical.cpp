#include "spinrat/classical.hpp"

#include "spinrat/errors.hpp"
#include "spinrat/log.hpp"
#include "orbit_quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/tools/toms748_solve.hpp>
#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <sstream>

namespace spinrat {

using std::numbers::pi;

namespace {

using State = std::array<double, 2>;  // (phi unwrapped, z)

constexpr double kTwoPi = 2.0 * pi;

struct FlowRhs {
    Coupling c;
    void operator()(const State& x, State& dxdt, double /*t*/) const {
        const double cs = std::cos(x[0]);
        const double sn = std::sin(x[0]);
        dxdt[0] = c.omega0 - x[1] * c.gamma_x * cs * cs;
        dxdt[1] = (1.0 - x[1] * x[1]) * c.gamma_x * sn * cs;
    }
};

auto make_stepper(double tol) {
    namespace odeint = boost::numeric::odeint;
    return odeint::make_controlled(tol, tol, odeint::runge_kutta_fehlberg78<State>());
}

PhasePoint to_point(const State& x) {
    PhasePoint p;
    p.z = std::clamp(x[1], -1.0, 1.0);
    p.phi = wrap_angle(x[0]);
    p.at_pole = (1.0 - std::abs(p.z)) == 0.0;
    return p;
}

double energy_of(const State& x, const Coupling& c) {
    return classical_energy(PhasePoint{x[0], x[1], false}, c);
}

void check_drift(double drift, const ClassicalParams& params) {
    if (drift > params.drift_tol) {
        std::ostringstream os;
        os << "energy drift " << drift << " exceeds drift_tol " << params.drift_tol;
        fail(ErrorKind::IntegrationAccuracy, os.str());
    }
}

}  // namespace

double wrap_angle(double phi) noexcept {
    double w = std::fmod(phi, kTwoPi);
    if (w < 0.0) w += kTwoPi;
    if (w >= kTwoPi) w = 0.0;
    return w;
}

double wrap_signed(double dphi) noexcept {
    double w = wrap_angle(dphi);
    if (w > pi) w -= kTwoPi;
    return w;
}

double classical_energy(const PhasePoint& p, const Coupling& c) noexcept {
    const double cs = std::cos(p.phi);
    return c.omega0 * p.z + 0.5 * (1.0 - p.z * p.z) * c.gamma_x * cs * cs;
}

PhaseVelocity hamilton_rhs(const PhasePoint& p, const Coupling& c) noexcept {
    const double cs = std::cos(p.phi);
    const double sn = std::sin(p.phi);
    return {c.omega0 - p.z * c.gamma_x * cs * cs, (1.0 - p.z * p.z) * c.gamma_x * sn * cs};
}

Trajectory integrate_flow(const PhasePoint& p, double duration, const ClassicalParams& params) {
    if (!(duration >= 0.0)) fail(ErrorKind::InvalidParameter, "flow duration must be >= 0");
    if (!(params.local_tol > 0.0)) fail(ErrorKind::InvalidParameter, "integrator tolerance must be > 0");

    Trajectory traj;
    State x{p.phi, p.z};
    const double e0 = energy_of(x, params.h0);
    double drift = 0.0;
    auto observer = [&](const State& s, double t) {
        traj.times.push_back(t);
        traj.points.push_back(to_point(s));
        drift = std::max(drift, std::abs(energy_of(s, params.h0) - e0));
    };
    if (duration == 0.0) {
        observer(x, 0.0);
    } else {
        boost::numeric::odeint::integrate_adaptive(make_stepper(params.local_tol), FlowRhs{params.h0}, x,
                                                   0.0, duration, std::min(0.1, duration), observer);
    }
    traj.energy_drift = drift;
    check_drift(drift, params);
    return traj;
}

PhasePoint flow_point(const PhasePoint& p, double duration, const ClassicalParams& params, double* drift) {
    if (duration <= 0.0) {
        if (drift) *drift = 0.0;
        return p;
    }
    if (params.flow == FlowMethod::Quadrature) {
        if (auto q = detail::quadrature_flow(p, duration, params.h0)) {
            const double d = std::abs(classical_energy(*q, params.h0) - classical_energy(p, params.h0));
            if (drift) *drift = d;
            check_drift(d, params);
            return *q;
        }
    }
    State x{p.phi, p.z};
    const double e0 = energy_of(x, params.h0);
    boost::numeric::odeint::integrate_adaptive(make_stepper(params.local_tol), FlowRhs{params.h0}, x, 0.0,
                                               duration, std::min(0.1, duration));
    const double d = std::abs(energy_of(x, params.h0) - e0);
    if (drift) *drift = d;
    check_drift(d, params);
    return to_point(x);
}

PhasePoint apply_kick(const PhasePoint& p, double epsilon) noexcept {
    if (epsilon == 0.0) return p;
    const double rho = std::sqrt(std::max(0.0, 1.0 - p.z * p.z));
    const double jx = rho * std::cos(p.phi);
    const double jy = rho * std::sin(p.phi);
    const double jz = p.z;
    const double ce = std::cos(epsilon);
    const double se = std::sin(epsilon);
    const double jy2 = jy * ce - jz * se;
    const double jz2 = jz * ce + jy * se;

    PhasePoint out;
    out.z = std::clamp(jz2, -1.0, 1.0);
    // Below this the azimuth is rounding noise.
    if (std::hypot(jx, jy2) < 1e-12) {
        out.z = jz2 > 0.0 ? 1.0 : -1.0;
        out.phi = 0.0;
        out.at_pole = true;
    } else {
        out.phi = wrap_angle(std::atan2(jy2, jx));
    }
    return out;
}

PhasePoint stroboscopic_map(const PhasePoint& p, const ClassicalParams& params) {
    const double tau = params.drive.tau;
    const double eps = params.drive.epsilon;
    switch (params.section) {
        case Section::AfterKick:
            return apply_kick(flow_point(p, tau, params), eps);
        case Section::BeforeKick:
            return flow_point(apply_kick(p, eps), tau, params);
        case Section::Symmetric:
            break;
    }
    return apply_kick(flow_point(apply_kick(p, 0.5 * eps), tau, params), 0.5 * eps);
}

PhasePoint iterate_map(PhasePoint p, int n, const ClassicalParams& params) {
    for (int i = 0; i < n; ++i) p = stroboscopic_map(p, params);
    return p;
}

std::vector<Trajectory> poincare_section(std::span<const PhasePoint> seeds, std::size_t n_iter,
                                         const ClassicalParams& params) {
    if (n_iter < 1) fail(ErrorKind::InvalidParameter, "poincare section needs n_iter >= 1");
    std::vector<Trajectory> out;
    out.reserve(seeds.size());
    for (std::size_t i = 0; i < seeds.size(); ++i) {
        const PhasePoint& seed = seeds[i];
        if (!(seed.z >= -1.0 && seed.z <= 1.0) || !std::isfinite(seed.phi)) {
            std::ostringstream os;
            os << "seed " << i << " out of bounds (phi=" << seed.phi << ", z=" << seed.z << ")";
            fail(ErrorKind::InvalidParameter, os.str());
        }
        Trajectory traj;
        traj.times.reserve(n_iter + 1);
        traj.points.reserve(n_iter + 1);
        PhasePoint x{wrap_angle(seed.phi), seed.z, seed.at_pole};
        traj.times.push_back(0.0);
        traj.points.push_back(x);
        for (std::size_t n = 1; n <= n_iter; ++n) {
            x = stroboscopic_map(x, params);
            traj.times.push_back(static_cast<double>(n) * params.drive.tau);
            traj.points.push_back(x);
        }
        out.push_back(std::move(traj));
    }
    return out;
}

double rotational_branch_z(double E, double phi, const Coupling& c) {
    const double cs = std::cos(phi);
    const double gamma = c.gamma_x * cs * cs;
    const double disc = c.omega0 * c.omega0 - 2.0 * E * gamma + gamma * gamma;
    if (!(disc > 0.0)) {
        std::ostringstream os;
        os << "energy " << E << " is not on a rotational orbit (discriminant " << disc << " at phi=" << phi << ")";
        fail(ErrorKind::EnergyOutOfFamily, os.str());
    }
    // (omega0 - D)/Gamma rewritten without cancellation.
    return (2.0 * E - gamma) / (c.omega0 + std::sqrt(disc));
}

double classical_period(double E, const Coupling& c, double quad_tol) {
    if (!(c.omega0 > 0.0)) fail(ErrorKind::InvalidParameter, "classical period assumes omega0 > 0");

    // Discriminant omega0^2 - 2 E G + G^2 over G in [min(0,gx), max(0,gx)]; its
    // minimum is at G = E when E lies inside that interval.
    const double g_lo = std::min(0.0, c.gamma_x);
    const double g_hi = std::max(0.0, c.gamma_x);
    const double g_star = std::clamp(E, g_lo, g_hi);
    const double disc_min = c.omega0 * c.omega0 - 2.0 * E * g_star + g_star * g_star;
    if (!(disc_min > 0.0)) {
        std::ostringstream os;
        os << "energy " << E << " is outside the rotational orbit family";
        fail(ErrorKind::EnergyOutOfFamily, os.str());
    }

    bool ambiguous = false;
    constexpr int kBranchSamples = 64;
    for (int i = 0; i < kBranchSamples; ++i) {
        const double phi = kTwoPi * i / kBranchSamples;
        const double z = rotational_branch_z(E, phi, c);
        if (std::abs(z) > 1.0) {
            std::ostringstream os;
            os << "rotational branch leaves the sphere at energy " << E << " (z=" << z << ")";
            fail(ErrorKind::EnergyOutOfFamily, os.str());
        }
        const double cs = std::cos(phi);
        const double gamma = c.gamma_x * cs * cs;
        if (gamma != 0.0) {
            const double other = (c.omega0 + std::sqrt(c.omega0 * c.omega0 - 2.0 * E * gamma + gamma * gamma)) / gamma;
            if (std::abs(other) <= 1.0) ambiguous = true;
        }
    }
    if (ambiguous) {
        std::ostringstream os;
        os << "both z-branches admissible at energy " << E << "; using the rotational branch";
        log::warn(os.str());
    }

    auto integrand = [&](double phi) {
        const double cs = std::cos(phi);
        const double gamma = c.gamma_x * cs * cs;
        return 1.0 / std::sqrt(c.omega0 * c.omega0 - 2.0 * E * gamma + gamma * gamma);
    };
    double err = 0.0;
    const double T = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, kTwoPi, 20,
                                                                                   quad_tol, &err);
    return T;
}

double find_resonant_energy(double T_target, const Coupling& c, double e_tol) {
    if (!(T_target > 0.0)) fail(ErrorKind::InvalidParameter, "target period must be > 0");
    const double bound = std::abs(c.omega0) + 0.5 * std::abs(c.gamma_x);
    constexpr int kSamples = 400;

    auto residual = [&](double E) { return classical_period(E, c) - T_target; };

    bool have_prev = false;
    double e_prev = 0.0;
    double f_prev = 0.0;
    for (int i = 0; i <= kSamples; ++i) {
        const double E = -bound + 2.0 * bound * i / kSamples;
        double f = 0.0;
        try {
            f = residual(E);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::EnergyOutOfFamily) throw;
            have_prev = false;
            continue;
        }
        if (f == 0.0) return E;
        if (have_prev && (f_prev < 0.0) != (f < 0.0)) {
            boost::uintmax_t max_iter = 200;
            auto tol = [e_tol](double a, double b) { return std::abs(b - a) <= e_tol; };
            const auto [a, b] = boost::math::tools::toms748_solve(residual, e_prev, E, f_prev, f, tol, max_iter);
            return 0.5 * (a + b);
        }
        have_prev = true;
        e_prev = E;
        f_prev = f;
    }
    std::ostringstream os;
    os << "no orbit with period " << T_target << " in the rotational family";
    fail(ErrorKind::NotFound, os.str());
}

ClassicalResonance classical_resonance(double T_orbit, int r, int s, const Coupling& c) {
    if (r < 1 || s < 1) fail(ErrorKind::InvalidParameter, "resonance integers must be >= 1");
    ClassicalResonance res;
    res.r = r;
    res.s = s;
    res.E_R = find_resonant_energy(T_orbit, c);
    res.T_R = classical_period(res.E_R, c);
    res.tau = s * res.T_R / r;
    return res;
}

}  // namespace spinrat
