// spinrat command-line driver.

#include "spinrat/analysis.hpp"
#include "spinrat/errors.hpp"
#include "spinrat/io.hpp"
#include "spinrat/log.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <tuple>

namespace fs = std::filesystem;
using namespace spinrat;

namespace {

enum Exit { kOk = 0, kIoError = 1, kConfigError = 2, kContractError = 3, kPartial = 4 };

struct Flags {
    std::string config;
    unsigned workers = 1;
    std::string out;
    bool resume = false;
    bool verbose = false;
};

struct Context {
    io::RunConfig cfg;
    fs::path out;
    unsigned workers = 1;
    bool resume = false;

    fs::path cache_dir() const { return out / "cache"; }
};

Context prepare(const Flags& f) {
    Context ctx;
    ctx.cfg = f.config.empty() ? io::parse_config(nlohmann::json::object()) : io::load_config(f.config);
    if (!f.out.empty()) ctx.cfg.output.directory = f.out;
    ctx.out = ctx.cfg.output.directory;
    ctx.workers = std::max(1u, f.workers);
    ctx.resume = f.resume;
    std::error_code ec;
    fs::create_directories(ctx.out, ec);
    if (ec) fail(ErrorKind::Io, "cannot create output directory " + ctx.out.string() + ": " + ec.message());
    io::write_atomic(ctx.out / "resolved_config.json", io::to_json(ctx.cfg).dump(2) + "\n");
    return ctx;
}

bool wants(const io::RunConfig& cfg, const std::string& format) {
    return std::find(cfg.output.formats.begin(), cfg.output.formats.end(), format) != cfg.output.formats.end();
}

double classical_drive_period(const io::RunConfig& cfg) {
    if (cfg.drive.tau) return *cfg.drive.tau;
    const ResonanceTemplate res = cfg.resonance_template();
    return res.s * classical_period(res.E_R, cfg.model.coupling, cfg.numerics.quad_tol) / res.r;
}

ClassicalParams classical_params(const io::RunConfig& cfg, double tau, double epsilon) {
    ClassicalParams p = cfg.sweep_options(1).classical;
    p.drive = Drive{tau, epsilon};
    return p;
}

std::string fmt(double v) { return io::format_double(v); }

// ---- spectrum --------------------------------------------------------------

int cmd_spectrum(const Context& ctx) {
    const double E_R = ctx.cfg.resonant_energy();
    std::cout << "J,k_R,T_r1,T_r2\n";
    for (SpinSize J : ctx.cfg.spins()) {
        const StaticSpectrum spec = io::cached_spectrum(ctx.cache_dir(), J, ctx.cfg.model.coupling);
        const std::size_t k_R = select_resonant_index(spec, E_R);
        std::cout << fmt(J.value()) << ',' << k_R;
        for (int r : {1, 2}) {
            std::cout << ',';
            if (k_R >= static_cast<std::size_t>(r)) std::cout << fmt(calibrate_tau(spec, k_R, r, 1));
        }
        std::cout << '\n';
    }
    return kOk;
}

// ---- poincare --------------------------------------------------------------

int cmd_poincare(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const double tau = classical_drive_period(cfg);
    for (double eps : cfg.drive.eps_grid) {
        const ClassicalParams params = classical_params(cfg, tau, eps);
        const auto& seeds = cfg.poincare.seeds;
        std::vector<std::vector<PhasePoint>> orbits(seeds.size());
        parallel_for(seeds.size(), ctx.workers, [&](std::size_t i) {
            try {
                auto traj = poincare_section(std::span(&seeds[i], 1), cfg.poincare.n_iter, params);
                orbits[i] = std::move(traj.front().points);
            } catch (const Error& e) {
                throw Error(e.kind(), "seed " + std::to_string(i) + ": " + e.what());
            }
        });
        std::ostringstream os;
        io::write_poincare_csv(os, orbits);
        const fs::path path = ctx.out / io::poincare_filename(tau, eps);
        io::write_atomic(path, os.str());
        log::info("wrote " + path.string());
    }
    return kOk;
}

// ---- splitting -------------------------------------------------------------

int cmd_splitting(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ResonanceTemplate res = cfg.resonance_template();
    const SweepOptions opts = cfg.sweep_options(ctx.workers);
    const auto spins = cfg.spins();
    std::vector<std::vector<std::string>> rows(spins.size());
    std::vector<bool> partial(spins.size(), false);

    parallel_for(spins.size(), ctx.workers, [&](std::size_t j) {
        const SpinSize J = spins[j];
        const StaticSpectrum spec = io::cached_spectrum(ctx.cache_dir(), J, cfg.model.coupling);
        const SpinOperators ops = build_spin_matrices(J);
        const ResonanceSpec rs = make_resonance(spec, res.r, res.s, res.E_R);
        const double tau = cfg.drive.tau.value_or(rs.tau_q);
        std::optional<ResonantPair> previous;
        for (double eps : cfg.drive.eps_grid) {
            std::ostringstream os;
            os << fmt(J.value()) << ',' << res.r << ',' << res.s << ',' << fmt(tau) << ',' << fmt(eps) << ',';
            try {
                const QuasiSpectrum qs = diagonalize_floquet(build_floquet(spec, ops, tau, eps));
                PairOptions po = opts.pair;
                const bool cont = po.tracking == PairTracking::Continuation && previous.has_value();
                if (!cont) po.tracking = PairTracking::Projection;
                const ResonantPair p =
                    identify_resonant_pair(qs, spec, rs.lower(), res.r, tau, po, cont ? &*previous : nullptr);
                os << fmt(p.phi_a) << ',' << fmt(p.phi_b) << ',' << fmt(p.delta_phi) << ',' << fmt(p.scaled) << ','
                   << fmt(p.overlap_a) << ',' << fmt(p.overlap_b) << ",ok";
                previous = p;
            } catch (const Error& e) {
                if (e.kind() == ErrorKind::ContractViolation) throw;
                os << ",,,,,," << to_string(e.kind());
                partial[j] = true;
                log::warn("J=" + fmt(J.value()) + " eps=" + fmt(eps) + ": " + e.what());
            }
            rows[j].push_back(os.str());
        }
    });

    std::string out = std::string(io::kSplittingHeader) + "\n";
    for (const auto& block : rows)
        for (const auto& line : block) out += line + "\n";
    io::write_atomic(ctx.out / "splitting.csv", out);
    return std::find(partial.begin(), partial.end(), true) != partial.end() ? kPartial : kOk;
}

// ---- pendulum --------------------------------------------------------------

int cmd_pendulum(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ResonanceTemplate res = cfg.resonance_template();
    const SweepOptions opts = cfg.sweep_options(ctx.workers);
    const double tau = classical_drive_period(cfg);
    const auto& grid = cfg.drive.eps_grid;
    std::vector<std::optional<IslandExtraction>> ex(grid.size());

    parallel_for(grid.size(), ctx.workers, [&](std::size_t i) {
        try {
            ex[i] = extract_island(res.E_R, res.r, res.s, classical_params(cfg, tau, grid[i]), opts.extraction);
        } catch (const Error& e) {
            log::warn("eps=" + fmt(grid[i]) + ": " + std::string(to_string(e.kind())) + ": " + e.what());
        }
    });

    std::string out = std::string(io::kExtractionHeader) + "\n";
    bool partial = false;
    for (SpinSize J : cfg.spins()) {
        for (std::size_t i = 0; i < grid.size(); ++i) {
            if (!ex[i]) {
                partial = true;
                continue;
            }
            out += io::extraction_row(io::ExtractionRecord{J, res.r, res.s, tau, grid[i], *ex[i]}) + "\n";
        }
    }
    io::write_atomic(ctx.out / "pendulum.csv", out);
    return partial ? kPartial : kOk;
}

// ---- sweep / fit -----------------------------------------------------------

using RowKey = std::tuple<double, int, int, double>;

RowKey key_of(const io::SweepRecord& r) { return {r.J, r.r, r.s, r.epsilon}; }

bool any_partial(const std::vector<io::SweepRecord>& rows) {
    return std::any_of(rows.begin(), rows.end(), [](const io::SweepRecord& r) { return r.status != "ok"; });
}

void write_fits(const Context& ctx, const std::vector<io::SweepRecord>& rows) {
    io::write_atomic(ctx.out / "fits.json", io::fit_sweep(rows).dump(2) + "\n");
}

int cmd_sweep(const Context& ctx) {
    const auto& cfg = ctx.cfg;
    const ResonanceTemplate res = cfg.resonance_template();
    const SweepOptions opts = cfg.sweep_options(ctx.workers);
    const auto& grid = cfg.drive.eps_grid;
    const auto spins = cfg.spins();
    const fs::path csv = ctx.out / "sweep.csv";

    std::vector<io::SweepRecord> rows;
    if (ctx.resume && fs::exists(csv)) {
        rows = io::read_sweep_csv(csv);
        log::info("resuming from " + csv.string() + " (" + std::to_string(rows.size()) + " rows)");
    } else if (fs::exists(csv)) {
        log::info("overwriting " + csv.string() + " (pass --resume to keep existing rows)");
    }
    std::set<RowKey> have;
    for (const auto& r : rows) have.insert(key_of(r));

    std::vector<SpinSize> todo;
    for (SpinSize J : spins) {
        const bool complete = std::all_of(grid.begin(), grid.end(), [&](double e) {
            return have.count(RowKey{J.value(), res.r, res.s, e}) > 0;
        });
        if (!complete) todo.push_back(J);
    }

    if (!todo.empty()) {
        const std::vector<ClassicalPoint> classical = classical_sweep(grid, res, opts);
        SweepOptions inner = opts;
        inner.workers = 1;
        std::mutex writer;
        parallel_for(todo.size(), ctx.workers, [&](std::size_t j) {
            const StaticSpectrum spec = io::cached_spectrum(ctx.cache_dir(), todo[j], cfg.model.coupling);
            SplittingCurve curve = quantum_sweep(spec, grid, res, classical, inner);
            estimate_epsilon_max(std::span(&curve, 1), classical);
            std::lock_guard lock(writer);
            for (auto& rec : io::sweep_records(curve)) {
                if (have.insert(key_of(rec)).second) rows.push_back(std::move(rec));
            }
            io::write_sweep_csv(csv, rows);
            log::info("J=" + fmt(todo[j].value()) + " done");
        });
    }
    io::write_sweep_csv(csv, rows);
    if (wants(cfg, "json")) write_fits(ctx, rows);
    return any_partial(rows) ? kPartial : kOk;
}

int cmd_fit(const Context& ctx) {
    const fs::path csv = ctx.out / "sweep.csv";
    if (!fs::exists(csv)) fail(ErrorKind::Io, csv.string() + " not found; run the sweep first");
    const auto rows = io::read_sweep_csv(csv);
    write_fits(ctx, rows);
    const auto fits = io::fit_sweep(rows);
    std::cout << fits.dump(2) << '\n';
    const bool invalid = std::any_of(fits.begin(), fits.end(), [](const auto& f) { return f.contains("error"); });
    return invalid ? kPartial : kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Resonance-assisted tunneling in the kicked LMG model"};
    app.require_subcommand(1);
    Flags flags;
    app.add_option("--config", flags.config, "JSON run configuration")->check(CLI::ExistingFile);
    app.add_option("--workers", flags.workers, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--out", flags.out, "output directory (overrides output.directory)");
    app.add_flag("--resume", flags.resume, "keep rows already present in the sweep CSV");
    app.add_flag("-v,--verbose", flags.verbose, "debug logging");

    using Command = int (*)(const Context&);
    const std::vector<std::tuple<const char*, const char*, Command>> commands = {
        {"spectrum", "cache H0 spectra and print quantum periods for r = 1, 2", cmd_spectrum},
        {"poincare", "stroboscopic sections for the configured seeds", cmd_poincare},
        {"splitting", "quasienergy splittings of the resonant pair", cmd_splitting},
        {"pendulum", "pendulum parameters from the classical island chain", cmd_pendulum},
        {"sweep", "quantum and semiclassical splittings over (J, epsilon) with fits", cmd_sweep},
        {"fit", "refit an existing sweep CSV", cmd_fit},
    };
    Command selected = nullptr;
    for (const auto& [name, help, fn] : commands) {
        auto* sub = app.add_subcommand(name, help);
        sub->fallthrough();
        sub->callback([&selected, fn = fn] { selected = fn; });
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kOk : kConfigError;
    }
    log::set_level(flags.verbose ? log::Level::Debug : log::Level::Info);

    try {
        const Context ctx = prepare(flags);
        return selected(ctx);
    } catch (const Error& e) {
        log::error(std::string(to_string(e.kind())) + ": " + e.what());
        switch (e.kind()) {
            case ErrorKind::Config: return kConfigError;
            case ErrorKind::Io: return kIoError;
            default: return kContractError;
        }
    } catch (const std::exception& e) {
        log::error(e.what());
        return kIoError;
    }
}
