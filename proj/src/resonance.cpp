#include "spinrat/resonance.hpp"

#include "spinrat/errors.hpp"
#include "spinrat/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace spinrat {

using std::numbers::pi;

namespace {

constexpr double kTwoPi = 2.0 * pi;

Eigen::Vector2d displacement(const PhasePoint& to, const PhasePoint& from) {
    return {wrap_signed(to.phi - from.phi), to.z - from.z};
}

PhasePoint shifted(const PhasePoint& p, double dphi, double dz) {
    return PhasePoint{wrap_angle(p.phi + dphi), std::clamp(p.z + dz, -1.0, 1.0), false};
}

// Jacobian of P^r at p by central differences with step h.
Eigen::Matrix2d map_jacobian(const PhasePoint& p, int r, double h, const ClassicalParams& params) {
    const PhasePoint phi_plus = iterate_map(shifted(p, h, 0.0), r, params);
    const PhasePoint phi_minus = iterate_map(shifted(p, -h, 0.0), r, params);
    const PhasePoint z_plus = iterate_map(shifted(p, 0.0, h), r, params);
    const PhasePoint z_minus = iterate_map(shifted(p, 0.0, -h), r, params);
    Eigen::Matrix2d M;
    M.col(0) = displacement(phi_plus, phi_minus) / (2.0 * h);
    M.col(1) = displacement(z_plus, z_minus) / (2.0 * h);
    return M;
}

double median(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const auto mid = v.begin() + static_cast<std::ptrdiff_t>(v.size() / 2);
    std::nth_element(v.begin(), mid, v.end());
    return *mid;
}

struct Envelope {
    std::vector<PhasePoint> points;  // sorted by phi
    double coverage = 0.0;
};

// Per-bin extremal point of an orbit: lowest z when `toward_lower`, else highest.
Envelope bin_envelope(const std::vector<PhasePoint>& orbit, std::size_t n_bins, bool toward_lower) {
    std::vector<int> best(n_bins, -1);
    for (std::size_t i = 0; i < orbit.size(); ++i) {
        auto bin = static_cast<std::size_t>(orbit[i].phi / kTwoPi * static_cast<double>(n_bins));
        bin = std::min(bin, n_bins - 1);
        const int cur = best[bin];
        if (cur < 0) {
            best[bin] = static_cast<int>(i);
            continue;
        }
        const double zc = orbit[static_cast<std::size_t>(cur)].z;
        if (toward_lower ? orbit[i].z < zc : orbit[i].z > zc) best[bin] = static_cast<int>(i);
    }
    Envelope env;
    std::size_t filled = 0;
    for (std::size_t b = 0; b < n_bins; ++b) {
        if (best[b] < 0) continue;
        ++filled;
        env.points.push_back(orbit[static_cast<std::size_t>(best[b])]);
    }
    env.coverage = static_cast<double>(filled) / static_cast<double>(n_bins);
    std::sort(env.points.begin(), env.points.end(),
              [](const PhasePoint& a, const PhasePoint& b) { return a.phi < b.phi; });
    return env;
}

}  // namespace

double energy_stddev(std::span<const double> energies) {
    if (energies.empty()) fail(ErrorKind::InvalidParameter, "energy_stddev needs a nonempty sample");
    double mean = 0.0;
    for (double e : energies) mean += e;
    mean /= static_cast<double>(energies.size());
    double var = 0.0;
    for (double e : energies) var += (e - mean) * (e - mean);
    return std::sqrt(var / static_cast<double>(energies.size()));
}

double energy_stddev(const Trajectory& traj, const Coupling& c) {
    std::vector<double> e;
    e.reserve(traj.points.size());
    for (const auto& p : traj.points) e.push_back(classical_energy(p, c));
    return energy_stddev(e);
}

double orbit_energy_stddev(const PhasePoint& p, int r, std::size_t n_iter, const ClassicalParams& params) {
    // Welford accumulation over the start point and n_iter iterates of P^r.
    PhasePoint x = p;
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t i = 0; i <= n_iter; ++i) {
        if (i > 0) x = iterate_map(x, r, params);
        const double e = classical_energy(x, params.h0);
        const double delta = e - mean;
        mean += delta / static_cast<double>(i + 1);
        m2 += delta * (e - mean);
    }
    return std::sqrt(std::max(0.0, m2 / static_cast<double>(n_iter + 1)));
}

PhasePoint locate_fixed_point(const PhasePoint& approx, int r, const ClassicalParams& params,
                              const ExtractionOptions& opts) {
    if (r < 1) fail(ErrorKind::InvalidParameter, "fixed point period r must be >= 1");
    PhasePoint x{wrap_angle(approx.phi), approx.z, false};
    double residual = std::numeric_limits<double>::infinity();
    for (int it = 0; it <= opts.newton_max_iter; ++it) {
        const Eigen::Vector2d g = displacement(iterate_map(x, r, params), x);
        residual = g.norm();
        if (residual < opts.newton_tol) return x;
        if (it == opts.newton_max_iter) break;
        const Eigen::Matrix2d dg = map_jacobian(x, r, opts.fd_step, params) - Eigen::Matrix2d::Identity();
        Eigen::Vector2d step = dg.fullPivLu().solve(-g);
        if (!step.allFinite()) break;
        // Keep Newton inside the neighbourhood of the island.
        const double limit = 0.05;
        if (step.norm() > limit) step *= limit / step.norm();
        x = shifted(x, step(0), step(1));
    }
    std::ostringstream os;
    os << "fixed point search did not converge (|P^r(x) - x| = " << residual << ")";
    fail(ErrorKind::NotConverged, os.str());
}

MonodromyResult monodromy(const PhasePoint& fp, int r, double fd_step, const ClassicalParams& params,
                          MonodromyCheck check) {
    if (!(fd_step > 0.0)) fail(ErrorKind::InvalidParameter, "fd_step must be > 0");
    MonodromyResult res;
    res.fd_step = fd_step;
    res.M = map_jacobian(fp, r, fd_step, params);
    res.trace = res.M.trace();
    res.det = res.M.determinant();
    res.trace_halved = map_jacobian(fp, r, 0.5 * fd_step, params).trace();
    if (check == MonodromyCheck::Enforce) {
        if (std::abs(res.det - 1.0) > 1e-6) {
            std::ostringstream os;
            os << "monodromy determinant " << res.det << " deviates from 1; retry with another fd_step (was "
               << fd_step << ")";
            fail(ErrorKind::StepSize, os.str());
        }
        if (res.trace >= 2.0) {
            std::ostringstream os;
            os << "monodromy trace " << res.trace << " >= 2: point is not elliptic";
            fail(ErrorKind::UnstablePoint, os.str());
        }
    }
    return res;
}

bool librates(const PhasePoint& p, int r, std::size_t max_iter, const ClassicalParams& params) {
    const double limit = kTwoPi / r;
    PhasePoint x = p;
    double drift = 0.0;
    for (std::size_t i = 0; i < max_iter; ++i) {
        const PhasePoint y = iterate_map(x, r, params);
        drift += wrap_signed(y.phi - x.phi);
        if (std::abs(drift) >= limit) return false;
        x = y;
    }
    return true;
}

SeparatrixScan scan_separatrix(double phi_line, double z_min, double z_max, std::size_t n_grid,
                               std::size_t n_iter, int r, const ClassicalParams& params,
                               const ExtractionOptions& opts) {
    if (n_grid < 100) fail(ErrorKind::InvalidParameter, "separatrix scan needs n_grid >= 100");
    if (!(z_min < z_max) || z_min < -1.0 || z_max > 1.0) {
        fail(ErrorKind::InvalidParameter, "scan range must satisfy -1 <= z_min < z_max <= 1");
    }

    SeparatrixScan scan;
    scan.phi_line = wrap_angle(phi_line);
    scan.r = r;
    scan.z_grid.resize(n_grid);
    scan.stddev.resize(n_grid);
    for (std::size_t i = 0; i < n_grid; ++i) {
        const double z = z_min + (z_max - z_min) * static_cast<double>(i) / static_cast<double>(n_grid - 1);
        scan.z_grid[i] = z;
        scan.stddev[i] = orbit_energy_stddev(PhasePoint{scan.phi_line, z, false}, r, n_iter, params);
    }

    const auto imin = static_cast<std::size_t>(
        std::min_element(scan.stddev.begin(), scan.stddev.end()) - scan.stddev.begin());
    std::vector<double> jumps(n_grid - 1);
    for (std::size_t i = 0; i + 1 < n_grid; ++i) jumps[i] = std::abs(scan.stddev[i + 1] - scan.stddev[i]);
    scan.jump_threshold = opts.jump_factor * median(jumps);

    auto largest = [&](std::size_t lo, std::size_t hi) -> std::ptrdiff_t {  // over [lo, hi)
        std::ptrdiff_t best = -1;
        for (std::size_t i = lo; i < hi; ++i) {
            if (jumps[i] > scan.jump_threshold && (best < 0 || jumps[i] > jumps[static_cast<std::size_t>(best)])) {
                best = static_cast<std::ptrdiff_t>(i);
            }
        }
        return best;
    };
    const std::ptrdiff_t up_jump = largest(imin, n_grid - 1);
    const std::ptrdiff_t low_jump = largest(0, imin);
    if (up_jump < 0 || low_jump < 0 || imin == 0 || imin + 1 == n_grid) {
        fail(ErrorKind::IslandNotFound, "energy-spread scan shows no separatrix on both sides of the minimum");
    }

    scan.fixed_point = locate_fixed_point(PhasePoint{scan.phi_line, scan.z_grid[imin], false}, r, params, opts);
    scan.z_fixed = scan.fixed_point.z;
    const MonodromyResult mono = monodromy(scan.fixed_point, r, opts.fd_step, params, MonodromyCheck::Skip);
    const double mu = std::acos(std::clamp(0.5 * mono.trace, -1.0, 1.0));
    const double periods = mu > 0.0 ? opts.min_libration_periods * kTwoPi / mu : 1e9;
    scan.classify_iter = std::max(n_iter, static_cast<std::size_t>(std::min(periods, 5e6)));

    auto inside = [&](double z) {
        return librates(PhasePoint{scan.phi_line, z, false}, r, scan.classify_iter, params);
    };
    // Bracket [inner, outer] around a crossing, walking the grid when the
    // jump location and the classifier disagree.
    auto refine = [&](std::ptrdiff_t jump, int dir) {
        auto idx = [&](std::ptrdiff_t i) { return scan.z_grid[static_cast<std::size_t>(i)]; };
        std::ptrdiff_t in = dir > 0 ? jump : jump + 1;
        std::ptrdiff_t out = in + dir;
        const auto last = static_cast<std::ptrdiff_t>(n_grid) - 1;
        const auto centre = static_cast<std::ptrdiff_t>(imin);
        while (!inside(idx(in))) {
            in -= dir;
            out -= dir;
            if ((dir > 0 && in < centre) || (dir < 0 && in > centre)) {
                fail(ErrorKind::IslandNotFound, "no librating orbit between the fixed point and the jump");
            }
        }
        while (inside(idx(out))) {
            in += dir;
            out += dir;
            if (out < 0 || out > last) fail(ErrorKind::IslandNotFound, "island extends beyond the scan range");
        }
        double zin = idx(in);
        double zout = idx(out);
        while (std::abs(zout - zin) > opts.z_tol) {
            const double mid = 0.5 * (zin + zout);
            (inside(mid) ? zin : zout) = mid;
        }
        return 0.5 * (zin + zout);
    };
    scan.z_upper = refine(up_jump, +1);
    scan.z_lower = refine(low_jump, -1);

    if (!(scan.z_lower < scan.z_fixed && scan.z_fixed < scan.z_upper)) {
        std::ostringstream os;
        os << "fixed point z=" << scan.z_fixed << " not between separatrix crossings [" << scan.z_lower << ", "
           << scan.z_upper << "]";
        fail(ErrorKind::IslandNotFound, os.str());
    }
    return scan;
}

double area_below(std::span<const PhasePoint> branch) {
    if (branch.size() < 2) fail(ErrorKind::TracingFailed, "branch has fewer than two points");
    double area = 0.0;
    for (std::size_t i = 0; i < branch.size(); ++i) {
        const PhasePoint& a = branch[i];
        const PhasePoint& b = branch[(i + 1) % branch.size()];
        double dphi = b.phi - a.phi;
        if (i + 1 == branch.size()) dphi += kTwoPi;
        area += 0.5 * ((a.z + 1.0) + (b.z + 1.0)) * dphi;
    }
    return area;
}

IslandGeometry trace_separatrix_branches(const SeparatrixScan& scan, double delta, std::size_t n_iter,
                                         const ClassicalParams& params, const ExtractionOptions& opts) {
    if (!(delta > 0.0)) fail(ErrorKind::InvalidParameter, "branch launch offset must be > 0");
    auto orbit_from = [&](double z) {
        std::vector<PhasePoint> pts;
        pts.reserve(n_iter + 1);
        PhasePoint x{scan.phi_line, z, false};
        pts.push_back(x);
        for (std::size_t i = 0; i < n_iter; ++i) {
            x = stroboscopic_map(x, params);
            pts.push_back(x);
        }
        return pts;
    };
    auto touches_pole = [](const std::vector<PhasePoint>& orbit) {
        return std::any_of(orbit.begin(), orbit.end(), [](const PhasePoint& p) { return p.at_pole; });
    };
    const auto line_bin = std::min(static_cast<std::size_t>(scan.phi_line / kTwoPi * static_cast<double>(opts.n_bins)),
                                   opts.n_bins - 1);
    auto in_line_bin = [&](const PhasePoint& p) {
        return std::min(static_cast<std::size_t>(p.phi / kTwoPi * static_cast<double>(opts.n_bins)), opts.n_bins - 1) ==
               line_bin;
    };
    auto finish = [&](IslandGeometry geom, Envelope upper, Envelope lower, double d) {
        geom.S_plus = area_below(upper.points);
        geom.S_minus = area_below(lower.points);
        geom.upper_branch = std::move(upper.points);
        geom.lower_branch = std::move(lower.points);
        geom.coverage_upper = upper.coverage;
        geom.coverage_lower = lower.coverage;
        geom.delta_used = d;
        PhasePoint x = scan.fixed_point;
        for (int i = 0; i < scan.r; ++i) {
            geom.fixed_points.push_back(x);
            x = stroboscopic_map(x, params);
        }
        return geom;
    };

    std::string last_error = "tracing failed";
    double d = delta;
    for (int attempt = 0; attempt <= opts.branch_retries; ++attempt, d *= 2.0) {
        const double z_up = scan.z_upper + d;
        const double z_lo = scan.z_lower - d;
        if (z_up >= 1.0 || z_lo <= -1.0) {
            last_error = "branch launch point leaves [-1, 1]";
            break;
        }
        const auto upper_orbit = orbit_from(z_up);
        const auto lower_orbit = orbit_from(z_lo);
        if (touches_pole(upper_orbit) || touches_pole(lower_orbit)) {
            last_error = "branch orbit reached a pole";
            continue;
        }
        // A branch orbit that reappears on the far side of the island on the
        // scan line has crossed the chain through a chaotic layer.
        const bool crossed =
            std::any_of(upper_orbit.begin(), upper_orbit.end(),
                        [&](const PhasePoint& p) { return in_line_bin(p) && p.z < scan.z_fixed; }) ||
            std::any_of(lower_orbit.begin(), lower_orbit.end(),
                        [&](const PhasePoint& p) { return in_line_bin(p) && p.z > scan.z_fixed; });
        if (crossed) {
            last_error = "branch orbits cross the island chain";
            continue;
        }
        Envelope upper = bin_envelope(upper_orbit, opts.n_bins, true);
        Envelope lower = bin_envelope(lower_orbit, opts.n_bins, false);
        if (upper.coverage < opts.min_coverage || lower.coverage < opts.min_coverage) {
            std::ostringstream os;
            os << "branch coverage " << upper.coverage << " / " << lower.coverage << " below "
               << opts.min_coverage;
            last_error = os.str();
            continue;
        }
        IslandGeometry geom = finish(IslandGeometry{}, std::move(upper), std::move(lower), d);
        if (geom.S_plus > geom.S_minus) return geom;
        last_error = "upper branch does not lie above the lower branch";
    }

    log::info("outer branch orbits failed (" + last_error + "); using the outermost librating torus");
    const double room = 0.5 * (scan.z_upper - scan.z_fixed);
    d = delta;
    for (int attempt = 0; attempt <= opts.branch_retries && d < room; ++attempt, d *= 2.0) {
        const double z0 = scan.z_upper - d;
        if (!librates(PhasePoint{scan.phi_line, z0, false}, scan.r, std::max(scan.classify_iter, n_iter / scan.r),
                      params)) {
            last_error = "torus inside the upper crossing does not librate";
            continue;
        }
        const auto torus = orbit_from(z0);
        Envelope upper = bin_envelope(torus, opts.n_bins, false);
        Envelope lower = bin_envelope(torus, opts.n_bins, true);
        if (upper.coverage < opts.min_coverage) {
            std::ostringstream os;
            os << "librating torus coverage " << upper.coverage << " below " << opts.min_coverage;
            last_error = os.str();
            continue;
        }
        IslandGeometry geom;
        geom.source = BranchSource::InnerTorus;
        geom = finish(std::move(geom), std::move(upper), std::move(lower), d);
        if (geom.S_plus > geom.S_minus) return geom;
        last_error = "librating torus encloses no area";
    }
    fail(ErrorKind::TracingFailed, last_error);
}

PendulumParams pendulum_params(double area_diff, double area_sum, double trace, int r, double tau) {
    if (r < 1 || !(tau > 0.0)) fail(ErrorKind::InvalidParameter, "pendulum parameters need r >= 1, tau > 0");
    const double a = area_diff / 16.0;
    if (!(a > 0.0)) fail(ErrorKind::DegenerateIsland, "separatrix branches enclose no area");
    if (!(trace > -2.0 && trace < 2.0)) {
        std::ostringstream os;
        os << "monodromy trace " << trace << " outside (-2, 2)";
        fail(ErrorKind::Domain, os.str());
    }
    const double b = std::acos(0.5 * trace) / (static_cast<double>(r * r) * tau);
    PendulumParams pp;
    pp.K_rs = 0.5 * a * b;
    pp.m_rs = a / b;
    pp.I_rs = area_sum / (4.0 * pi);
    pp.r = r;
    pp.tau = tau;
    return pp;
}

PendulumParams pendulum_params(const IslandGeometry& geom, const MonodromyResult& mono, int r, double tau) {
    return pendulum_params(geom.S_plus - geom.S_minus, geom.S_plus + geom.S_minus, mono.trace, r, tau);
}

double pendulum_levels(const PendulumParams& pp, double hbar_eff, int n) {
    if (!(pp.m_rs > 0.0)) fail(ErrorKind::InvalidParameter, "pendulum levels need m > 0");
    const double d = hbar_eff * (n + 0.5) - pp.I_rs;
    return d * d / (2.0 * pp.m_rs);
}

double rat_splitting(const PendulumParams& pp, double hbar_eff) {
    return 2.0 * std::abs(pp.K_rs) * pp.tau / hbar_eff;
}

double harmonic_splitting(const PendulumParams& pp) {
    if (pp.K_rs == 0.0) return 0.0;
    if (!(pp.m_rs > 0.0)) fail(ErrorKind::InvalidParameter, "harmonic splitting needs m > 0");
    return pp.r * pp.tau * std::sqrt(2.0 * std::abs(pp.K_rs) / pp.m_rs);
}

double PowerLaw::operator()(double x) const { return prefactor * std::pow(x, exponent); }

double epsilon_max(const PowerLaw& K_fit, double m_rs, int r, double hbar_eff) {
    if (!(K_fit.prefactor > 0.0) || !(K_fit.exponent > 0.0) || !(m_rs > 0.0) || !(hbar_eff > 0.0)) {
        fail(ErrorKind::InvalidFit, "epsilon_max needs positive fit prefactor, exponent, mass and hbar");
    }
    const double rhs = static_cast<double>(r * r) * hbar_eff * hbar_eff / (2.0 * K_fit.prefactor * m_rs);
    return std::pow(rhs, 1.0 / K_fit.exponent);
}

double epsilon_max_crossing(std::span<const double> eps, std::span<const double> rat,
                            std::span<const double> harm) {
    if (eps.size() != rat.size() || eps.size() != harm.size() || eps.size() < 2) {
        fail(ErrorKind::InvalidParameter, "crossing needs equal-length curves with >= 2 points");
    }
    for (std::size_t i = 0; i + 1 < eps.size(); ++i) {
        if (!(eps[i] > 0 && rat[i] > 0 && harm[i] > 0 && rat[i + 1] > 0 && harm[i + 1] > 0)) continue;
        const double g0 = std::log(rat[i] / harm[i]);
        const double g1 = std::log(rat[i + 1] / harm[i + 1]);
        if (g0 == 0.0) return eps[i];
        if ((g0 < 0.0) != (g1 < 0.0)) {
            const double t = g0 / (g0 - g1);
            return std::exp(std::log(eps[i]) + t * (std::log(eps[i + 1]) - std::log(eps[i])));
        }
    }
    fail(ErrorKind::NotFound, "RAT and harmonic curves do not cross on the sampled grid");
}

double mass_from_period(double E, const Coupling& c, double dE) {
    const double T = classical_period(E, c);
    const double dT = (classical_period(E + dE, c) - classical_period(E - dE, c)) / (2.0 * dE);
    const double omega = kTwoPi / T;
    const double domega = -kTwoPi * dT / (T * T);
    return 1.0 / (omega * domega);
}

IslandExtraction extract_island(double E_R, int r, int s, const ClassicalParams& params,
                                const ExtractionOptions& opts) {
    const double phi_line = opts.phi_over_r ? pi / r : opts.phi_line;
    const double tau = params.drive.tau;

    IslandExtraction out;
    const PhasePoint guess{wrap_angle(phi_line), rotational_branch_z(E_R, phi_line, params.h0), false};
    const PhasePoint fp = locate_fixed_point(guess, r, params, opts);
    out.mono = monodromy(fp, r, opts.fd_step, params, MonodromyCheck::Enforce);
    out.mass_estimate = mass_from_period(E_R, params.h0);

    // Window from the pendulum estimate: action half-width 2a with a = m b,
    // mapped to z on the scan line through dz = dI * omega / phidot.
    const double mu = std::acos(std::clamp(0.5 * out.mono.trace, -1.0, 1.0));
    const double b = mu / (static_cast<double>(r * r) * tau);
    const double half_action = 2.0 * out.mass_estimate * b;
    const double omega = kTwoPi / classical_period(E_R, params.h0);
    const double phidot = hamilton_rhs(fp, params.h0).dphi_dt;
    const double half_z = opts.window_factor * half_action * omega / std::abs(phidot);
    const double z_min = std::max(-1.0, fp.z - half_z);
    const double z_max = std::min(1.0, fp.z + half_z);

    const auto libration = static_cast<std::size_t>(std::ceil(3.0 * kTwoPi / std::max(mu, 1e-9)));
    const std::size_t n_iter = std::max(opts.n_iter, libration);

    out.scan = scan_separatrix(fp.phi, z_min, z_max, opts.n_grid, n_iter, r, params, opts);
    const std::size_t branch_iter = std::max(opts.branch_iter, 20 * libration);
    out.geometry = trace_separatrix_branches(out.scan, opts.branch_delta, branch_iter, params, opts);
    out.pendulum = pendulum_params(out.geometry, out.mono, r, tau);
    out.pendulum.s = s;
    out.pendulum.epsilon = params.drive.epsilon;
    return out;
}

}  // namespace spinrat
