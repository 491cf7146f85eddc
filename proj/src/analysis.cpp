#include "spinrat/analysis.hpp"

#include "spinrat/errors.hpp"
#include "spinrat/log.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace spinrat {

namespace {

std::string join_status(const std::string& a, const std::string& b) {
    if (a == "ok") return b;
    if (b == "ok" || a == b) return a;
    return a + "+" + b;
}

void require_increasing(std::span<const double> eps) {
    if (eps.empty()) fail(ErrorKind::InvalidParameter, "epsilon grid is empty");
    for (std::size_t i = 0; i < eps.size(); ++i) {
        if (!(eps[i] >= 0.0)) fail(ErrorKind::InvalidParameter, "epsilon grid entries must be >= 0");
        if (i > 0 && !(eps[i] > eps[i - 1])) fail(ErrorKind::InvalidParameter, "epsilon grid must be strictly increasing");
    }
}

double classical_tau(const ResonanceTemplate& res, const Coupling& c) {
    return res.s * classical_period(res.E_R, c) / res.r;
}

}  // namespace

PowerLaw PowerLawFit::law() const { return PowerLaw{std::exp(intercept), slope}; }

PowerLawFit loglog_fit(std::span<const double> x, std::span<const double> y) {
    if (x.size() != y.size()) fail(ErrorKind::InvalidFit, "loglog_fit needs equal-length inputs");
    if (x.size() < 4) {
        std::ostringstream os;
        os << "loglog_fit needs at least 4 points, got " << x.size();
        fail(ErrorKind::InvalidFit, os.str());
    }
    const std::size_t n = x.size();
    std::vector<double> lx(n), ly(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0) || !(y[i] > 0.0) || !std::isfinite(x[i]) || !std::isfinite(y[i])) {
            fail(ErrorKind::Domain, "loglog_fit needs finite positive data");
        }
        lx[i] = std::log(x[i]);
        ly[i] = std::log(y[i]);
    }
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += lx[i];
        my += ly[i];
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    if (!(sxx > 0.0)) fail(ErrorKind::InvalidFit, "loglog_fit needs at least two distinct x values");

    PowerLawFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.n_points = n;
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double res = ly[i] - (fit.intercept + fit.slope * lx[i]);
        ss += res * res;
    }
    fit.residual_rms = std::sqrt(ss / static_cast<double>(n));
    return fit;
}

std::vector<double> log_grid(double lo, double hi, int per_decade) {
    if (!(lo > 0.0) || !(hi >= lo) || per_decade < 1) {
        fail(ErrorKind::InvalidParameter, "log_grid needs 0 < lo <= hi and per_decade >= 1");
    }
    const double decades = std::log10(hi / lo);
    const auto steps = static_cast<int>(std::ceil(decades * per_decade - 1e-9));
    std::vector<double> g;
    if (steps == 0) return {lo};
    for (int i = 0; i <= steps; ++i) g.push_back(lo * std::pow(hi / lo, static_cast<double>(i) / steps));
    g.front() = lo;
    g.back() = hi;
    return g;
}

std::vector<ClassicalPoint> classical_sweep(std::span<const double> eps_grid, const ResonanceTemplate& res,
                                            const SweepOptions& opts) {
    require_increasing(eps_grid);
    const double tau = classical_tau(res, opts.h0);
    std::vector<ClassicalPoint> out(eps_grid.size());
    parallel_for(eps_grid.size(), opts.workers, [&](std::size_t i) {
        ClassicalPoint& pt = out[i];
        pt.epsilon = eps_grid[i];
        ClassicalParams params = opts.classical;
        params.h0 = opts.h0;
        params.drive = Drive{tau, pt.epsilon};
        if (pt.epsilon == 0.0) {
            // Unperturbed: no island, both predictions vanish.
            PendulumParams pp;
            pp.r = res.r;
            pp.s = res.s;
            pp.tau = tau;
            pp.m_rs = mass_from_period(res.E_R, opts.h0);
            pp.I_rs = 0.0;
            pt.pendulum = pp;
            pt.trace = 2.0;
            return;
        }
        try {
            const IslandExtraction ex = extract_island(res.E_R, res.r, res.s, params, opts.extraction);
            pt.pendulum = ex.pendulum;
            pt.trace = ex.mono.trace;
            pt.area = ex.geometry.area();
        } catch (const Error& e) {
            pt.status = std::string(to_string(e.kind()));
            log::info("classical point eps=" + std::to_string(pt.epsilon) + ": " + e.what());
            // The harmonic prediction needs only the stable point.
            try {
                const double phi = opts.extraction.phi_over_r ? std::numbers::pi / res.r : opts.extraction.phi_line;
                const PhasePoint guess{wrap_angle(phi), rotational_branch_z(res.E_R, phi, opts.h0), false};
                const PhasePoint fp = locate_fixed_point(guess, res.r, params, opts.extraction);
                const MonodromyResult mono = monodromy(fp, res.r, opts.extraction.fd_step, params);
                pt.trace = mono.trace;
            } catch (const Error&) {
            }
        }
    });
    return out;
}

SplittingCurve quantum_sweep(SpinSize J, std::span<const double> eps_grid, const ResonanceTemplate& res,
                             std::span<const ClassicalPoint> classical, const SweepOptions& opts) {
    return quantum_sweep(compute_static_spectrum(J, opts.h0), eps_grid, res, classical, opts);
}

SplittingCurve quantum_sweep(const StaticSpectrum& spec, std::span<const double> eps_grid, const ResonanceTemplate& res,
                             std::span<const ClassicalPoint> classical, const SweepOptions& opts) {
    require_increasing(eps_grid);
    if (classical.size() != eps_grid.size()) fail(ErrorKind::InvalidParameter, "classical columns do not match the grid");

    const SpinSize J = spec.J;
    const SpinOperators ops = build_spin_matrices(J);
    const ResonanceSpec rs = make_resonance(spec, res.r, res.s, res.E_R);
    const double tau_c = classical_tau(res, opts.h0);
    const double hbar = J.hbar_eff();

    SplittingCurve curve;
    curve.J = J;
    curve.r = res.r;
    curve.s = res.s;
    curve.tau_q = rs.tau_q;
    curve.k_R = rs.k_R;

    std::optional<ResonantPair> previous;
    for (std::size_t i = 0; i < eps_grid.size(); ++i) {
        SplittingRow row;
        row.epsilon = eps_grid[i];
        const ClassicalPoint& cp = classical[i];
        if (cp.pendulum) {
            row.rat = 2.0 * std::abs(cp.pendulum->K_rs);
            row.area = cp.area;
        }
        if (cp.trace && *cp.trace > -2.0 && *cp.trace <= 2.0) {
            const double b = std::acos(std::min(1.0, 0.5 * *cp.trace)) / (res.r * res.r * tau_c);
            row.harm = hbar * res.r * b;
        }
        row.status = cp.status;

        try {
            const QuasiSpectrum qs = diagonalize_floquet(build_floquet(spec, ops, rs.tau_q, row.epsilon));
            PairOptions po = opts.pair;
            const bool continue_from_previous = po.tracking == PairTracking::Continuation && previous.has_value();
            if (!continue_from_previous) po.tracking = PairTracking::Projection;
            const ResonantPair pair = identify_resonant_pair(qs, spec, rs.lower(), res.r, rs.tau_q, po,
                                                             continue_from_previous ? &*previous : nullptr);
            row.delta_phi = pair.delta_phi;
            row.delta_phi_reduced = reduced_splitting(pair.delta_phi, res.r);
            row.quantum_scaled = pair.scaled;
            row.overlap_a = pair.overlap_a;
            row.overlap_b = pair.overlap_b;
            previous = pair;
        } catch (const Error& e) {
            row.status = join_status(row.status, std::string(to_string(e.kind())));
            log::info("J=" + std::to_string(J.value()) + " eps=" + std::to_string(row.epsilon) + ": " + e.what());
        }
        curve.rows.push_back(std::move(row));
    }
    return curve;
}

std::vector<SplittingCurve> sweep_splitting(std::span<const SpinSize> J_list, std::span<const double> eps_grid,
                                            const ResonanceTemplate& res, const SweepOptions& opts) {
    if (J_list.empty()) fail(ErrorKind::InvalidParameter, "J list is empty");
    const std::vector<ClassicalPoint> classical = classical_sweep(eps_grid, res, opts);
    std::vector<SplittingCurve> curves(J_list.size());
    SweepOptions inner = opts;
    inner.workers = 1;
    parallel_for(J_list.size(), opts.workers,
                 [&](std::size_t j) { curves[j] = quantum_sweep(J_list[j], eps_grid, res, classical, inner); });
    estimate_epsilon_max(curves, classical);
    return curves;
}

namespace {

template <class Value>
PowerLawFit fit_classical(std::span<const ClassicalPoint> points, Value value) {
    std::vector<double> x, y;
    for (const auto& p : points) {
        if (p.status != "ok" || !p.pendulum || !(p.epsilon > 0.0)) continue;
        const double v = value(p);
        if (!(v > 0.0)) continue;
        x.push_back(p.epsilon);
        y.push_back(v);
    }
    return loglog_fit(x, y);
}

}  // namespace

PowerLawFit fit_coupling(std::span<const ClassicalPoint> points) {
    return fit_classical(points, [](const ClassicalPoint& p) { return std::abs(p.pendulum->K_rs); });
}

PowerLawFit fit_area(std::span<const ClassicalPoint> points) {
    return fit_classical(points, [](const ClassicalPoint& p) { return p.area; });
}

double mean_mass(std::span<const ClassicalPoint> points) {
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& p : points) {
        if (p.status != "ok" || !p.pendulum || !(p.epsilon > 0.0)) continue;
        sum += p.pendulum->m_rs;
        ++n;
    }
    if (n == 0) fail(ErrorKind::InvalidFit, "no extracted pendulum to average the mass over");
    return sum / static_cast<double>(n);
}

double epsilon_max_estimate(const PowerLawFit& K_fit, double m, int r, SpinSize J) {
    return epsilon_max(K_fit.law(), m, r, J.hbar_eff());
}

void estimate_epsilon_max(std::span<SplittingCurve> curves, std::span<const ClassicalPoint> classical) {
    std::optional<PowerLawFit> K_fit;
    std::optional<double> m;
    try {
        K_fit = fit_coupling(classical);
        m = mean_mass(classical);
    } catch (const Error& e) {
        log::warn(std::string("epsilon_max estimate unavailable: ") + e.what());
    }
    for (auto& c : curves) {
        if (K_fit && m) c.epsilon_max_estimate = epsilon_max_estimate(*K_fit, *m, c.r, c.J);
        std::vector<double> eps, rat, harm;
        for (const auto& row : c.rows) {
            if (!row.rat || !row.harm || !(row.epsilon > 0.0)) continue;
            eps.push_back(row.epsilon);
            rat.push_back(*row.rat);
            harm.push_back(*row.harm);
        }
        try {
            c.epsilon_max_crossing = epsilon_max_crossing(eps, rat, harm);
        } catch (const Error&) {
        }
        if (c.epsilon_max_estimate && c.epsilon_max_crossing) {
            const double rel = std::abs(*c.epsilon_max_crossing - *c.epsilon_max_estimate) / *c.epsilon_max_estimate;
            if (rel > 0.5) {
                std::ostringstream os;
                os << "J=" << c.J.value() << " " << c.r << ":" << c.s << ": epsilon_max estimates disagree ("
                   << *c.epsilon_max_estimate << " fit, " << *c.epsilon_max_crossing << " crossing)";
                log::warn(os.str());
            }
        }
    }
}

PowerLawFit scaling_epsilon_max(std::span<const double> J, std::span<const double> eps_max) {
    return loglog_fit(J, eps_max);
}

PowerLawFit scaling_epsilon_max(std::span<const SplittingCurve> curves) {
    std::vector<double> J, e;
    for (const auto& c : curves) {
        if (!c.epsilon_max_estimate) continue;
        J.push_back(c.J.value());
        e.push_back(*c.epsilon_max_estimate);
    }
    return scaling_epsilon_max(J, e);
}

}  // namespace spinrat
