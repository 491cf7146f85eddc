#include "spinrat/quantum_core.hpp"

#include "spinrat/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <utility>
#include <vector>

namespace spinrat {

using std::numbers::pi;

SpinSize SpinSize::from_double(double J) {
    const double twice = 2.0 * J;
    const double rounded = std::round(twice);
    if (!(J > 0.0) || std::abs(twice - rounded) > 1e-9 || rounded > 1e7) {
        std::ostringstream os;
        os << "spin size J=" << J << " is not a positive integer or half-integer";
        fail(ErrorKind::InvalidParameter, os.str());
    }
    return SpinSize(static_cast<int>(rounded));
}

SpinSize SpinSize::from_twice(int twoJ) {
    if (twoJ < 1) {
        fail(ErrorKind::InvalidParameter, "2J must be a positive integer");
    }
    return SpinSize(twoJ);
}

void ModelParams::validate() const {
    if (J.twice() < 2) fail(ErrorKind::InvalidParameter, "J must be >= 1");
    if (r < 1 || s < 1) fail(ErrorKind::InvalidParameter, "resonance integers r, s must be >= 1");
    if (!(drive.epsilon >= 0.0)) fail(ErrorKind::InvalidParameter, "epsilon must be >= 0");
    if (!(drive.tau > 0.0)) fail(ErrorKind::InvalidParameter, "tau must be > 0");
    if (!std::isfinite(h0.omega0) || !std::isfinite(h0.gamma_x)) {
        fail(ErrorKind::InvalidParameter, "omega0 and gamma_x must be finite");
    }
}

Eigen::MatrixXcd SpinOperators::jy() const {
    // <m+1|J+|m> = 2 * jx(m+1, m), so Jy(m+1, m) = -i/2 * that and Jy(m, m+1) = +i/2.
    const auto n = static_cast<Eigen::Index>(dimension());
    Eigen::MatrixXcd out = Eigen::MatrixXcd::Zero(n, n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double ladder = jx(i + 1, i);
        out(i + 1, i) = std::complex<double>(0.0, -ladder);
        out(i, i + 1) = std::complex<double>(0.0, ladder);
    }
    return out;
}

SpinOperators build_spin_matrices(SpinSize J) {
    const double j = J.value();
    const auto n = static_cast<Eigen::Index>(J.dimension());
    SpinOperators ops{J, Eigen::VectorXd(n), Eigen::MatrixXd::Zero(n, n)};
    for (Eigen::Index i = 0; i < n; ++i) {
        ops.jz_diag(i) = -j + static_cast<double>(i);
    }
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double m = ops.jz_diag(i);
        const double v = 0.5 * std::sqrt(j * (j + 1.0) - m * (m + 1.0));
        ops.jx(i, i + 1) = v;
        ops.jx(i + 1, i) = v;
    }
    return ops;
}

Eigen::MatrixXd build_h0(const SpinOperators& ops, const Coupling& c) {
    if (ops.J.twice() < 2) {
        fail(ErrorKind::InvalidParameter, "H0 requires J >= 1 (coupling divides by 2J-1)");
    }
    const double scale = c.gamma_x / (static_cast<double>(ops.J.twice()) - 1.0);
    // Jx is tridiagonal, so Jx^2 is pentadiagonal; form it band-wise.
    const auto n = static_cast<Eigen::Index>(ops.dimension());
    Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const double up = i + 1 < n ? ops.jx(i, i + 1) : 0.0;
        const double down = i > 0 ? ops.jx(i, i - 1) : 0.0;
        h(i, i) = c.omega0 * ops.jz_diag(i) + scale * (up * up + down * down);
        if (i + 2 < n) {
            const double v = scale * ops.jx(i, i + 1) * ops.jx(i + 1, i + 2);
            h(i, i + 2) = v;
            h(i + 2, i) = v;
        }
    }
    return h;
}

Eigen::VectorXd parity_diagonal(const SpinOperators& ops) {
    const auto n = static_cast<Eigen::Index>(ops.dimension());
    Eigen::VectorXd p(n);
    for (Eigen::Index i = 0; i < n; ++i) p(i) = (i % 2 == 0) ? 1.0 : -1.0;
    return p;
}

namespace {

// When H0 commutes with the parity diagonal it splits into two blocks; each
// block of the LMG form is tridiagonal. Returns false when H0 mixes parities.
bool diagonalize_by_parity(const Eigen::MatrixXd& h0, const Eigen::VectorXd& parity, Eigen::VectorXd& energies,
                           Eigen::MatrixXd& states) {
    const Eigen::Index n = h0.rows();
    std::vector<Eigen::Index> block[2];
    for (Eigen::Index i = 0; i < n; ++i) block[parity(i) > 0.0 ? 0 : 1].push_back(i);
    const double scale = std::max(h0.cwiseAbs().maxCoeff(), 1.0);
    for (Eigen::Index i : block[0]) {
        for (Eigen::Index j : block[1]) {
            if (std::abs(h0(i, j)) > 1e-14 * scale) return false;
        }
    }

    std::vector<std::pair<double, Eigen::VectorXd>> levels;
    levels.reserve(static_cast<std::size_t>(n));
    for (const auto& idx : block) {
        const auto m = static_cast<Eigen::Index>(idx.size());
        if (m == 0) continue;
        Eigen::MatrixXd b(m, m);
        for (Eigen::Index i = 0; i < m; ++i) {
            for (Eigen::Index j = 0; j < m; ++j) b(i, j) = h0(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
        }
        bool tridiagonal = true;
        for (Eigen::Index i = 0; i < m && tridiagonal; ++i) {
            for (Eigen::Index j = i + 2; j < m; ++j) {
                if (b(i, j) != 0.0) {
                    tridiagonal = false;
                    break;
                }
            }
        }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
        if (tridiagonal && m > 1) {
            es.computeFromTridiagonal(b.diagonal(), b.diagonal(-1), Eigen::ComputeEigenvectors);
        } else {
            es.compute(b);
        }
        if (es.info() != Eigen::Success) fail(ErrorKind::ContractViolation, "H0 block diagonalization failed");
        for (Eigen::Index k = 0; k < m; ++k) {
            Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
            for (Eigen::Index i = 0; i < m; ++i) v(idx[static_cast<std::size_t>(i)]) = es.eigenvectors()(i, k);
            levels.emplace_back(es.eigenvalues()(k), std::move(v));
        }
    }
    std::sort(levels.begin(), levels.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    energies.resize(n);
    states.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        energies(k) = levels[static_cast<std::size_t>(k)].first;
        states.col(k) = levels[static_cast<std::size_t>(k)].second;
    }
    return true;
}

}  // namespace

StaticSpectrum build_static_spectrum(const Eigen::MatrixXd& h0, const Eigen::VectorXd& parity,
                                     Coupling coupling) {
    if (h0.rows() != h0.cols() || h0.rows() != parity.size() || h0.rows() < 2) {
        fail(ErrorKind::InvalidParameter, "H0 must be square, at least 2x2, and match the parity diagonal");
    }
    StaticSpectrum spec;
    spec.J = SpinSize::from_twice(static_cast<int>(h0.rows()) - 1);
    spec.h0 = coupling;
    if (!diagonalize_by_parity(h0, parity, spec.energies, spec.states)) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h0);
        if (solver.info() != Eigen::Success) {
            fail(ErrorKind::ContractViolation, "H0 diagonalization failed");
        }
        spec.energies = solver.eigenvalues();
        spec.states = solver.eigenvectors();
    }

    const Eigen::Index n = spec.energies.size();
    const double emax = spec.energies.cwiseAbs().maxCoeff();
    for (Eigen::Index k = 0; k + 1 < n; ++k) {
        const double gap = spec.energies(k + 1) - spec.energies(k);
        if (gap < kDegeneracyGuard * emax) {
            std::ostringstream os;
            os << "near-degenerate levels " << k << "," << k + 1 << " (gap " << gap
               << "); parameters outside the non-degenerate regime";
            fail(ErrorKind::Degeneracy, os.str());
        }
    }

    spec.parities.resize(static_cast<std::size_t>(n));
    for (Eigen::Index k = 0; k < n; ++k) {
        const double p = spec.states.col(k).cwiseAbs2().dot(parity);
        if (std::abs(std::abs(p) - 1.0) > kParityTol) {
            std::ostringstream os;
            os << "level " << k << " has parity expectation " << p << ", not +-1";
            fail(ErrorKind::Degeneracy, os.str());
        }
        spec.parities[static_cast<std::size_t>(k)] = p > 0.0 ? 1 : -1;
    }
    return spec;
}

StaticSpectrum compute_static_spectrum(SpinSize J, const Coupling& c) {
    const SpinOperators ops = build_spin_matrices(J);
    return build_static_spectrum(build_h0(ops, c), parity_diagonal(ops), c);
}

double quantum_period(const StaticSpectrum& spec, std::size_t k, int r) {
    if (r < 1 || k + static_cast<std::size_t>(r) >= spec.size()) {
        std::ostringstream os;
        os << "quantum period index k=" << k << ", r=" << r << " outside spectrum of size " << spec.size();
        fail(ErrorKind::Bounds, os.str());
    }
    const auto i = static_cast<Eigen::Index>(k);
    return 2.0 * pi / (spec.energies(i + r) - spec.energies(i));
}

std::size_t select_resonant_index(const StaticSpectrum& spec, double E_R) {
    const double J = spec.J.value();
    std::size_t best = 0;
    double best_dist = std::abs(spec.energies(0) / J - E_R);
    for (Eigen::Index k = 1; k < spec.energies.size(); ++k) {
        const double d = std::abs(spec.energies(k) / J - E_R);
        if (d < best_dist) {
            best_dist = d;
            best = static_cast<std::size_t>(k);
        }
    }
    return best;
}

double calibrate_tau(const StaticSpectrum& spec, std::size_t k_R, int r, int s) {
    if (s < 1) fail(ErrorKind::InvalidParameter, "s must be >= 1");
    if (r < 1 || k_R < static_cast<std::size_t>(r) || k_R >= spec.size()) {
        std::ostringstream os;
        os << "resonant pair (k_R - r, k_R) = (" << static_cast<long long>(k_R) - r << ", " << k_R
           << ") outside spectrum of size " << spec.size();
        fail(ErrorKind::Bounds, os.str());
    }
    return s * quantum_period(spec, k_R - static_cast<std::size_t>(r), r);
}

ResonanceSpec make_resonance(const StaticSpectrum& spec, int r, int s, double E_R) {
    ResonanceSpec res;
    res.r = r;
    res.s = s;
    res.E_R = E_R;
    res.k_R = select_resonant_index(spec, E_R);
    res.tau_q = calibrate_tau(spec, res.k_R, r, s);
    return res;
}

double jx_matrix_element(const StaticSpectrum& spec, const SpinOperators& ops,
                         std::size_t a, std::size_t b) {
    if (a >= spec.size() || b >= spec.size()) fail(ErrorKind::Bounds, "matrix element index out of range");
    const auto ia = static_cast<Eigen::Index>(a);
    const auto ib = static_cast<Eigen::Index>(b);
    return std::abs(spec.states.col(ia).dot(ops.jx * spec.states.col(ib)));
}

Eigen::VectorXcd spin_coherent_state(SpinSize J, double phi, double z) {
    // Polar angle theta from +z: cos(theta) = z. Amplitudes follow from
    // rotating |J, J>: c_m = sqrt(C(2J, J+m)) cos^{J+m}(theta/2) sin^{J-m}(theta/2) e^{-i m phi}.
    const int n = J.twice() + 1;
    const double j = J.value();
    const double theta = std::acos(std::clamp(z, -1.0, 1.0));
    const double c = std::cos(0.5 * theta);
    const double s = std::sin(0.5 * theta);
    Eigen::VectorXcd psi(n);
    for (int i = 0; i < n; ++i) {
        const double m = -j + i;
        const double up = j + m;
        const double down = j - m;
        double logmag = 0.5 * (std::lgamma(2.0 * j + 1.0) - std::lgamma(up + 1.0) - std::lgamma(down + 1.0));
        bool zero = false;
        if (up > 0) {
            if (c == 0.0) zero = true; else logmag += up * std::log(c);
        }
        if (down > 0) {
            if (s == 0.0) zero = true; else logmag += down * std::log(s);
        }
        psi(i) = zero ? std::complex<double>{} : std::polar(std::exp(logmag), -m * phi);
    }
    return psi / psi.norm();
}

SpinExpectation expectation(const SpinOperators& ops, const Eigen::VectorXcd& psi) {
    SpinExpectation e;
    e.jx = (psi.adjoint() * ops.jx.cast<std::complex<double>>() * psi)(0).real();
    e.jy = (psi.adjoint() * ops.jy() * psi)(0).real();
    e.jz = (psi.cwiseAbs2().transpose() * ops.jz_diag)(0);
    return e;
}

Eigen::MatrixXcd rotation_about_x(const SpinOperators& ops, double theta) {
    const auto n = static_cast<Eigen::Index>(ops.dimension());
    Eigen::VectorXd diag = Eigen::VectorXd::Zero(n);
    Eigen::VectorXd sub(n - 1);
    for (Eigen::Index i = 0; i + 1 < n; ++i) sub(i) = ops.jx(i + 1, i);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es;
    es.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
    const Eigen::MatrixXcd w = es.eigenvectors().cast<std::complex<double>>();
    Eigen::VectorXcd phases(n);
    for (Eigen::Index i = 0; i < n; ++i) phases(i) = std::polar(1.0, -theta * es.eigenvalues()(i));
    return w * phases.asDiagonal() * w.adjoint();
}

}  // namespace spinrat
