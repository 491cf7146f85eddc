#include "orbit_quadrature.hpp"

#include "spinrat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <vector>

namespace spinrat::detail {

namespace {

using std::numbers::pi;

constexpr int kMinSamples = 32;
constexpr int kMaxSamples = 4096;
// Relative size of the two highest retained coefficients; rounding in the
// sampled sums sits near 1e-16, so the bar is set above it.
constexpr double kCoeffTol = 1e-14;
constexpr int kMaxNewton = 40;

// Sample grid phi_j = pi*j/n and cos(2 k phi_j) for k < n/2.
struct CosineTable {
    int n = 0;
    std::vector<double> u;       // cos^2(phi_j)
    std::vector<double> cos2k;   // row-major [k][j]
};

const CosineTable& cosine_table(int n) {
    thread_local std::map<int, CosineTable> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    CosineTable t;
    t.n = n;
    t.u.resize(static_cast<std::size_t>(n));
    t.cos2k.resize(static_cast<std::size_t>(n / 2) * static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        const double phi = pi * j / n;
        const double c = std::cos(phi);
        t.u[static_cast<std::size_t>(j)] = c * c;
        for (int k = 0; k < n / 2; ++k) {
            t.cos2k[static_cast<std::size_t>(k) * n + j] = std::cos(2.0 * k * phi);
        }
    }
    return cache.emplace(n, std::move(t)).first->second;
}

struct Discriminant {
    double a, b, c;  // omega0^2 - 2 E gx u + gx^2 u^2 = a + b u + c u^2
    double at(double u) const noexcept { return a + u * (b + c * u); }
};

// Cosine coefficients of 1/D over one pi-period; empty on non-convergence.
std::vector<double> inverse_speed_series(const Discriminant& d) {
    for (int n = kMinSamples; n <= kMaxSamples; n *= 2) {
        const CosineTable& t = cosine_table(n);
        std::vector<double> f(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) f[static_cast<std::size_t>(j)] = 1.0 / std::sqrt(d.at(t.u[static_cast<std::size_t>(j)]));
        const int kmax = n / 2;
        std::vector<double> coeff(static_cast<std::size_t>(kmax));
        for (int k = 0; k < kmax; ++k) {
            const double* row = &t.cos2k[static_cast<std::size_t>(k) * n];
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += f[static_cast<std::size_t>(j)] * row[j];
            coeff[static_cast<std::size_t>(k)] = acc / n;
        }
        const double tail = std::abs(coeff[kmax - 1]) + std::abs(coeff[kmax - 2]);
        if (tail <= kCoeffTol * std::abs(coeff[0])) {
            // Drop negligible trailing terms before evaluation.
            int keep = kmax;
            while (keep > 2 && std::abs(coeff[static_cast<std::size_t>(keep - 1)]) <= 1e-18 * coeff[0]) --keep;
            coeff.resize(static_cast<std::size_t>(keep));
            return coeff;
        }
    }
    return {};
}

// sum_{k>=1} (2 c_k / (2k)) sin(2 k phi) via Clenshaw's recurrence.
double periodic_part(const std::vector<double>& coeff, double phi) {
    const double theta = 2.0 * phi;
    const double two_cos = 2.0 * std::cos(theta);
    double b1 = 0.0;
    double b2 = 0.0;
    for (std::size_t k = coeff.size() - 1; k >= 1; --k) {
        const double a = coeff[k] / static_cast<double>(k);
        const double b0 = a + two_cos * b1 - b2;
        b2 = b1;
        b1 = b0;
    }
    return b1 * std::sin(theta);
}

}  // namespace

std::optional<PhasePoint> quadrature_flow(const PhasePoint& p, double duration, const Coupling& c) {
    if (!(c.omega0 > 0.0) || !(duration >= 0.0)) return std::nullopt;
    if (duration == 0.0) return p;

    const double E = classical_energy(p, c);
    const Discriminant d{c.omega0 * c.omega0, -2.0 * E * c.gamma_x, c.gamma_x * c.gamma_x};
    // Minimum over u in [0, 1] of the discriminant must stay positive.
    double dmin = std::min(d.at(0.0), d.at(1.0));
    if (d.c > 0.0) {
        const double u_star = -d.b / (2.0 * d.c);
        if (u_star > 0.0 && u_star < 1.0) dmin = std::min(dmin, d.at(u_star));
    }
    if (!(dmin > 1e-10)) return std::nullopt;

    double z_branch = 0.0;
    try {
        z_branch = rotational_branch_z(E, p.phi, c);
    } catch (const Error&) {
        return std::nullopt;
    }
    if (std::abs(z_branch - p.z) > 1e-9) return std::nullopt;

    const std::vector<double> coeff = inverse_speed_series(d);
    if (coeff.empty()) return std::nullopt;
    const double c0 = coeff[0];

    // time(phi) = c0*phi + S(phi); solve time(phi1) = time(phi0) + duration.
    const double phi0 = p.phi;
    const double target = c0 * phi0 + periodic_part(coeff, phi0) + duration;
    double phi = phi0 + duration / c0;
    // Newton with the exact derivative 1/D; one polishing step after the
    // update falls below 1e-13.
    bool converged = false;
    for (int it = 0; it < kMaxNewton; ++it) {
        const double residual = c0 * phi + periodic_part(coeff, phi) - target;
        const double cs = std::cos(phi);
        const double step = residual * std::sqrt(d.at(cs * cs));
        phi -= step;
        if (converged) break;
        if (std::abs(step) <= 1e-13 * (1.0 + std::abs(phi))) converged = true;
    }
    if (!converged) return std::nullopt;

    PhasePoint out;
    out.phi = wrap_angle(phi);
    out.z = std::clamp(rotational_branch_z(E, phi, c), -1.0, 1.0);
    out.at_pole = (1.0 - std::abs(out.z)) == 0.0;
    return out;
}

}  // namespace spinrat::detail
