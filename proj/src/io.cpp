#include "spinrat/io.hpp"

#include "spinrat/errors.hpp"
#include "spinrat/log.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unistd.h>

namespace spinrat::io {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

std::string format_optional(const std::optional<double>& v) { return v ? format_double(*v) : std::string(); }

// ---- configuration -------------------------------------------------------

namespace {

constexpr double kDefaultResonantEnergy = -0.723276;

[[noreturn]] void config_error(const std::string& where, const std::string& what) {
    fail(ErrorKind::Config, where + ": " + what);
}

void only_keys(const json& obj, const std::string& where, std::initializer_list<const char*> allowed) {
    if (!obj.is_object()) config_error(where, "expected an object");
    std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [key, _] : obj.items()) {
        if (!ok.count(key)) config_error(where, "unknown key '" + key + "'");
    }
}

double number(const json& v, const std::string& where) {
    if (!v.is_number()) config_error(where, "expected a number");
    return v.get<double>();
}

int integer(const json& v, const std::string& where) {
    if (!v.is_number_integer()) config_error(where, "expected an integer");
    return v.get<int>();
}

std::size_t count(const json& v, const std::string& where) {
    if (!v.is_number_unsigned() || v.get<std::size_t>() == 0) config_error(where, "expected a positive integer");
    return v.get<std::size_t>();
}

std::vector<double> number_list(const json& v, const std::string& where) {
    if (!v.is_array() || v.empty()) config_error(where, "expected a nonempty array of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], where + "[" + std::to_string(i) + "]"));
    return out;
}

std::vector<double> parse_eps_grid(const json& v) {
    if (v.is_array()) return number_list(v, "drive.eps_grid");
    only_keys(v, "drive.eps_grid", {"min", "max", "per_decade"});
    if (!v.contains("min") || !v.contains("max")) config_error("drive.eps_grid", "needs min and max");
    const double lo = number(v["min"], "drive.eps_grid.min");
    const double hi = number(v["max"], "drive.eps_grid.max");
    const int per_decade = v.contains("per_decade") ? integer(v["per_decade"], "drive.eps_grid.per_decade") : 20;
    try {
        return log_grid(lo, hi, per_decade);
    } catch (const Error& e) {
        config_error("drive.eps_grid", e.what());
    }
}

}  // namespace

std::vector<double> default_eps_grid(int r) {
    return r == 1 ? log_grid(1e-5, 1e-2, 20) : log_grid(3e-3, 0.15, 20);
}

RunConfig parse_config(const json& j) {
    only_keys(j, "config", {"model", "resonance", "drive", "numerics", "poincare", "output"});
    RunConfig cfg;

    if (j.contains("model")) {
        const json& m = j["model"];
        only_keys(m, "model", {"J", "J_list", "omega0", "gamma_x"});
        if (m.contains("J") && m.contains("J_list")) config_error("model", "give either J or J_list");
        if (m.contains("J")) cfg.model.J_list = {number(m["J"], "model.J")};
        if (m.contains("J_list")) cfg.model.J_list = number_list(m["J_list"], "model.J_list");
        if (m.contains("omega0")) cfg.model.coupling.omega0 = number(m["omega0"], "model.omega0");
        if (m.contains("gamma_x")) cfg.model.coupling.gamma_x = number(m["gamma_x"], "model.gamma_x");
    }
    if (j.contains("resonance")) {
        const json& r = j["resonance"];
        only_keys(r, "resonance", {"r", "s", "E_R", "T_target"});
        if (r.contains("E_R") && r.contains("T_target")) config_error("resonance", "give either E_R or T_target");
        if (r.contains("r")) cfg.resonance.r = integer(r["r"], "resonance.r");
        if (r.contains("s")) cfg.resonance.s = integer(r["s"], "resonance.s");
        if (r.contains("E_R")) cfg.resonance.E_R = number(r["E_R"], "resonance.E_R");
        if (r.contains("T_target")) cfg.resonance.T_target = number(r["T_target"], "resonance.T_target");
    }
    if (j.contains("drive")) {
        const json& d = j["drive"];
        only_keys(d, "drive", {"tau", "epsilon", "eps_grid"});
        if (d.contains("epsilon") && d.contains("eps_grid")) config_error("drive", "give either epsilon or eps_grid");
        if (d.contains("tau")) cfg.drive.tau = number(d["tau"], "drive.tau");
        if (d.contains("epsilon")) cfg.drive.eps_grid = {number(d["epsilon"], "drive.epsilon")};
        if (d.contains("eps_grid")) cfg.drive.eps_grid = parse_eps_grid(d["eps_grid"]);
    }
    if (j.contains("numerics")) {
        const json& n = j["numerics"];
        only_keys(n, "numerics",
                  {"drift_tol", "quad_tol", "z_tol", "jump_threshold", "n_grid", "n_iter", "fd_step", "overlap_floor",
                   "tracking_mode"});
        auto& num = cfg.numerics;
        if (n.contains("drift_tol")) num.drift_tol = number(n["drift_tol"], "numerics.drift_tol");
        if (n.contains("quad_tol")) num.quad_tol = number(n["quad_tol"], "numerics.quad_tol");
        if (n.contains("z_tol")) num.z_tol = number(n["z_tol"], "numerics.z_tol");
        if (n.contains("jump_threshold")) num.jump_threshold = number(n["jump_threshold"], "numerics.jump_threshold");
        if (n.contains("n_grid")) num.n_grid = count(n["n_grid"], "numerics.n_grid");
        if (n.contains("n_iter")) num.n_iter = count(n["n_iter"], "numerics.n_iter");
        if (n.contains("fd_step")) num.fd_step = number(n["fd_step"], "numerics.fd_step");
        if (n.contains("overlap_floor")) num.overlap_floor = number(n["overlap_floor"], "numerics.overlap_floor");
        if (n.contains("tracking_mode")) {
            const json& t = n["tracking_mode"];
            if (t == "projection") {
                num.tracking_mode = PairTracking::Projection;
            } else if (t == "continuation") {
                num.tracking_mode = PairTracking::Continuation;
            } else {
                config_error("numerics.tracking_mode", "expected \"projection\" or \"continuation\"");
            }
        }
    }
    if (j.contains("poincare")) {
        const json& p = j["poincare"];
        only_keys(p, "poincare", {"seeds", "n_iter"});
        if (p.contains("n_iter")) cfg.poincare.n_iter = count(p["n_iter"], "poincare.n_iter");
        if (p.contains("seeds")) {
            const json& s = p["seeds"];
            if (!s.is_array()) config_error("poincare.seeds", "expected an array of [phi, z] pairs");
            for (std::size_t i = 0; i < s.size(); ++i) {
                const std::string where = "poincare.seeds[" + std::to_string(i) + "]";
                if (!s[i].is_array() || s[i].size() != 2) config_error(where, "expected [phi, z]");
                cfg.poincare.seeds.push_back(PhasePoint{number(s[i][0], where), number(s[i][1], where), false});
            }
        }
    }
    if (j.contains("output")) {
        const json& o = j["output"];
        only_keys(o, "output", {"directory", "formats"});
        if (o.contains("directory")) {
            if (!o["directory"].is_string()) config_error("output.directory", "expected a string");
            cfg.output.directory = o["directory"].get<std::string>();
        }
        if (o.contains("formats")) {
            if (!o["formats"].is_array()) config_error("output.formats", "expected an array of strings");
            cfg.output.formats.clear();
            for (const auto& f : o["formats"]) {
                if (f != "csv" && f != "json") config_error("output.formats", "supported formats are csv and json");
                cfg.output.formats.push_back(f.get<std::string>());
            }
        }
    }

    // Semantic checks.
    for (double J : cfg.model.J_list) {
        try {
            if (SpinSize::from_double(J).twice() < 2) config_error("model.J_list", "J must be >= 1");
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Config) throw;
            config_error("model.J_list", e.what());
        }
    }
    if (cfg.resonance.r < 1 || cfg.resonance.s < 1) config_error("resonance", "r and s must be >= 1");
    if (cfg.drive.tau && !(*cfg.drive.tau > 0.0)) config_error("drive.tau", "must be > 0");
    if (cfg.drive.eps_grid.empty()) cfg.drive.eps_grid = default_eps_grid(cfg.resonance.r);
    for (std::size_t i = 0; i < cfg.drive.eps_grid.size(); ++i) {
        if (!(cfg.drive.eps_grid[i] >= 0.0)) config_error("drive.eps_grid", "entries must be >= 0");
        if (i > 0 && !(cfg.drive.eps_grid[i] > cfg.drive.eps_grid[i - 1])) {
            config_error("drive.eps_grid", "must be strictly increasing");
        }
    }
    const auto& num = cfg.numerics;
    if (!(num.drift_tol > 0) || !(num.quad_tol > 0) || !(num.z_tol > 0) || !(num.fd_step > 0) ||
        !(num.jump_threshold > 0)) {
        config_error("numerics", "tolerances, fd_step and jump_threshold must be > 0");
    }
    if (num.n_grid < 100) config_error("numerics.n_grid", "must be >= 100");
    if (!(num.overlap_floor > 0.0 && num.overlap_floor <= 1.0)) config_error("numerics.overlap_floor", "must lie in (0, 1]");
    return cfg;
}

RunConfig load_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) config_error(path.string(), "cannot open config file");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        config_error(path.string(), std::string("invalid JSON: ") + e.what());
    }
    return parse_config(j);
}

json to_json(const RunConfig& cfg) {
    json j;
    j["model"] = {{"J_list", cfg.model.J_list},
                  {"omega0", cfg.model.coupling.omega0},
                  {"gamma_x", cfg.model.coupling.gamma_x}};
    j["resonance"] = {{"r", cfg.resonance.r}, {"s", cfg.resonance.s}};
    if (cfg.resonance.T_target) {
        j["resonance"]["T_target"] = *cfg.resonance.T_target;
    } else {
        j["resonance"]["E_R"] = cfg.resonance.E_R.value_or(kDefaultResonantEnergy);
    }
    j["drive"] = {{"eps_grid", cfg.drive.eps_grid}};
    if (cfg.drive.tau) j["drive"]["tau"] = *cfg.drive.tau;
    const auto& n = cfg.numerics;
    j["numerics"] = {{"drift_tol", n.drift_tol},
                     {"quad_tol", n.quad_tol},
                     {"z_tol", n.z_tol},
                     {"jump_threshold", n.jump_threshold},
                     {"n_grid", n.n_grid},
                     {"n_iter", n.n_iter},
                     {"fd_step", n.fd_step},
                     {"overlap_floor", n.overlap_floor},
                     {"tracking_mode", n.tracking_mode == PairTracking::Projection ? "projection" : "continuation"}};
    json seeds = json::array();
    for (const auto& s : cfg.poincare.seeds) seeds.push_back({s.phi, s.z});
    j["poincare"] = {{"seeds", seeds}, {"n_iter", cfg.poincare.n_iter}};
    j["output"] = {{"directory", cfg.output.directory.string()}, {"formats", cfg.output.formats}};
    return j;
}

std::vector<SpinSize> RunConfig::spins() const {
    std::vector<SpinSize> out;
    for (double J : model.J_list) out.push_back(SpinSize::from_double(J));
    return out;
}

double RunConfig::resonant_energy() const {
    if (resonance.T_target) return find_resonant_energy(*resonance.T_target, model.coupling);
    return resonance.E_R.value_or(kDefaultResonantEnergy);
}

ResonanceTemplate RunConfig::resonance_template() const {
    return ResonanceTemplate{resonance.r, resonance.s, resonant_energy()};
}

SweepOptions RunConfig::sweep_options(unsigned workers) const {
    SweepOptions o;
    o.h0 = model.coupling;
    o.classical.h0 = model.coupling;
    o.classical.drift_tol = numerics.drift_tol;
    o.extraction.z_tol = numerics.z_tol;
    o.extraction.jump_factor = numerics.jump_threshold;
    o.extraction.n_grid = numerics.n_grid;
    o.extraction.n_iter = numerics.n_iter;
    o.extraction.fd_step = numerics.fd_step;
    o.pair.overlap_floor = numerics.overlap_floor;
    o.pair.tracking = numerics.tracking_mode;
    o.workers = workers;
    return o;
}

// ---- spectrum cache ------------------------------------------------------

namespace {

constexpr char kMagic[16] = {'S', 'P', 'I', 'N', 'R', 'A', 'T', '-', 'S', 'P', 'E', 'C', 'T', 'R', 'U', 'M'};
constexpr std::uint32_t kCacheVersion = 1;

std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

template <class T>
void put(std::string& buf, const T& v) {
    buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

struct Reader {
    const std::string& buf;
    std::size_t pos = 0;
    template <class T>
    T get() {
        if (pos + sizeof(T) > buf.size()) fail(ErrorKind::Io, "spectrum cache truncated");
        T v;
        std::memcpy(&v, buf.data() + pos, sizeof(T));
        pos += sizeof(T);
        return v;
    }
};

}  // namespace

void write_atomic(const fs::path& path, const std::string& content) {
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    const fs::path tmp = path.string() + ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) fail(ErrorKind::Io, "cannot write " + tmp.string() + ": " + std::strerror(errno));
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) fail(ErrorKind::Io, "write to " + tmp.string() + " failed: " + std::strerror(errno));
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        fail(ErrorKind::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

fs::path spectrum_cache_path(const fs::path& dir, SpinSize J, const Coupling& c) {
    return dir / ("spectrum_2J" + std::to_string(J.twice()) + "_w" + format_double(c.omega0) + "_g" +
                  format_double(c.gamma_x) + ".bin");
}

void save_spectrum(const fs::path& path, const StaticSpectrum& spec) {
    std::string buf(kMagic, sizeof kMagic);
    put(buf, kCacheVersion);
    put(buf, static_cast<std::int32_t>(spec.J.twice()));
    put(buf, spec.h0.omega0);
    put(buf, spec.h0.gamma_x);
    const auto n = static_cast<std::uint64_t>(spec.size());
    put(buf, n);
    buf.append(reinterpret_cast<const char*>(spec.energies.data()), n * sizeof(double));
    for (int p : spec.parities) put(buf, static_cast<std::int8_t>(p));
    buf.append(reinterpret_cast<const char*>(spec.states.data()), n * n * sizeof(double));
    put(buf, fnv1a(buf));
    write_atomic(path, buf);
}

std::optional<StaticSpectrum> load_spectrum(const fs::path& path, SpinSize J, const Coupling& c) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    const std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < sizeof kMagic + sizeof(std::uint64_t) || std::memcmp(buf.data(), kMagic, sizeof kMagic) != 0) {
        fail(ErrorKind::Io, path.string() + ": not a spectrum cache file");
    }
    const std::string body = buf.substr(0, buf.size() - sizeof(std::uint64_t));
    std::uint64_t stored = 0;
    std::memcpy(&stored, buf.data() + body.size(), sizeof stored);
    if (stored != fnv1a(body)) fail(ErrorKind::Io, path.string() + ": checksum mismatch");

    Reader rd{body, sizeof kMagic};
    if (rd.get<std::uint32_t>() != kCacheVersion) fail(ErrorKind::Io, path.string() + ": unsupported cache version");
    const auto twoJ = rd.get<std::int32_t>();
    const auto omega0 = rd.get<double>();
    const auto gamma_x = rd.get<double>();
    const auto n = rd.get<std::uint64_t>();
    if (twoJ != J.twice() || omega0 != c.omega0 || gamma_x != c.gamma_x || n != J.dimension()) {
        fail(ErrorKind::Io, path.string() + ": cache parameters do not match the request");
    }
    if (body.size() != rd.pos + n * sizeof(double) + n + n * n * sizeof(double)) {
        fail(ErrorKind::Io, path.string() + ": cache size mismatch");
    }
    StaticSpectrum spec;
    spec.J = J;
    spec.h0 = c;
    spec.energies.resize(static_cast<Eigen::Index>(n));
    std::memcpy(spec.energies.data(), body.data() + rd.pos, n * sizeof(double));
    rd.pos += n * sizeof(double);
    spec.parities.resize(n);
    for (auto& p : spec.parities) p = rd.get<std::int8_t>();
    spec.states.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::memcpy(spec.states.data(), body.data() + rd.pos, n * n * sizeof(double));
    return spec;
}

StaticSpectrum cached_spectrum(const fs::path& dir, SpinSize J, const Coupling& c, CacheOutcome* outcome) {
    const fs::path path = spectrum_cache_path(dir, J, c);
    CacheOutcome result = CacheOutcome::Miss;
    try {
        if (auto spec = load_spectrum(path, J, c)) {
            log::info("spectrum cache hit: " + path.string());
            if (outcome) *outcome = CacheOutcome::Hit;
            return *spec;
        }
    } catch (const Error& e) {
        log::warn(std::string("spectrum cache unusable, recomputing: ") + e.what());
        result = CacheOutcome::Corrupt;
    }
    StaticSpectrum spec = compute_static_spectrum(J, c);
    save_spectrum(path, spec);
    log::info("spectrum cached: " + path.string());
    if (outcome) *outcome = result;
    return spec;
}

// ---- tables --------------------------------------------------------------

std::string poincare_filename(double tau, double epsilon) {
    return "poincare_tau" + format_double(tau) + "_eps" + format_double(epsilon) + ".csv";
}

void write_poincare_csv(std::ostream& os, const std::vector<std::vector<PhasePoint>>& orbits) {
    os << kPoincareHeader << '\n';
    for (std::size_t s = 0; s < orbits.size(); ++s) {
        for (std::size_t i = 0; i < orbits[s].size(); ++i) {
            os << s << ',' << i << ',' << format_double(orbits[s][i].phi) << ',' << format_double(orbits[s][i].z)
               << '\n';
        }
    }
}

std::string extraction_row(const ExtractionRecord& rec) {
    const auto& pp = rec.ex.pendulum;
    const double hbar = rec.J.hbar_eff();
    std::ostringstream os;
    os << format_double(rec.J.value()) << ',' << rec.r << ',' << rec.s << ',' << format_double(rec.tau) << ','
       << format_double(rec.epsilon) << ',' << format_double(rec.ex.geometry.S_plus) << ','
       << format_double(rec.ex.geometry.S_minus) << ',' << format_double(rec.ex.mono.trace) << ','
       << format_double(rec.ex.mono.det) << ',' << format_double(pp.I_rs) << ',' << format_double(pp.m_rs) << ','
       << format_double(pp.K_rs) << ',' << format_double(rat_splitting(pp, hbar)) << ','
       << format_double(harmonic_splitting(pp));
    return os.str();
}

std::vector<SweepRecord> sweep_records(const SplittingCurve& curve) {
    std::vector<SweepRecord> out;
    for (const auto& row : curve.rows) {
        SweepRecord r;
        r.J = curve.J.value();
        r.r = curve.r;
        r.s = curve.s;
        r.tau = curve.tau_q;
        r.epsilon = row.epsilon;
        r.quantum_scaled = row.quantum_scaled;
        r.rat = row.rat;
        r.harm = row.harm;
        r.area = row.area;
        r.delta_phi = row.delta_phi;
        r.delta_phi_reduced = row.delta_phi_reduced;
        r.overlap_a = row.overlap_a;
        r.overlap_b = row.overlap_b;
        r.epsilon_max_fit = curve.epsilon_max_estimate;
        r.epsilon_max_crossing = curve.epsilon_max_crossing;
        r.status = row.status;
        out.push_back(std::move(r));
    }
    return out;
}

std::string sweep_row(const SweepRecord& r) {
    std::ostringstream os;
    os << format_double(r.J) << ',' << r.r << ',' << r.s << ',' << format_double(r.tau) << ','
       << format_double(r.epsilon) << ',' << format_optional(r.quantum_scaled) << ',' << format_optional(r.rat) << ','
       << format_optional(r.harm) << ',' << format_optional(r.area) << ',' << format_optional(r.delta_phi) << ','
       << format_optional(r.delta_phi_reduced) << ',' << format_double(r.overlap_a) << ','
       << format_double(r.overlap_b) << ',' << format_optional(r.epsilon_max_fit) << ','
       << format_optional(r.epsilon_max_crossing) << ',' << r.status;
    return os.str();
}

namespace {

std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

double parse_number(const std::string& s, const fs::path& path) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        fail(ErrorKind::Io, path.string() + ": malformed number '" + s + "'");
    }
    return v;
}

std::optional<double> parse_optional(const std::string& s, const fs::path& path) {
    if (s.empty()) return std::nullopt;
    return parse_number(s, path);
}

}  // namespace

std::vector<SweepRecord> read_sweep_csv(const fs::path& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorKind::Io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line != kSweepHeader) fail(ErrorKind::Io, path.string() + ": unexpected header");
    std::vector<SweepRecord> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto c = split_csv(line);
        if (c.size() != 16) fail(ErrorKind::Io, path.string() + ": row with " + std::to_string(c.size()) + " fields");
        SweepRecord r;
        r.J = parse_number(c[0], path);
        r.r = static_cast<int>(parse_number(c[1], path));
        r.s = static_cast<int>(parse_number(c[2], path));
        r.tau = parse_number(c[3], path);
        r.epsilon = parse_number(c[4], path);
        r.quantum_scaled = parse_optional(c[5], path);
        r.rat = parse_optional(c[6], path);
        r.harm = parse_optional(c[7], path);
        r.area = parse_optional(c[8], path);
        r.delta_phi = parse_optional(c[9], path);
        r.delta_phi_reduced = parse_optional(c[10], path);
        r.overlap_a = parse_number(c[11], path);
        r.overlap_b = parse_number(c[12], path);
        r.epsilon_max_fit = parse_optional(c[13], path);
        r.epsilon_max_crossing = parse_optional(c[14], path);
        r.status = c[15];
        rows.push_back(std::move(r));
    }
    return rows;
}

void write_sweep_csv(const fs::path& path, std::vector<SweepRecord> rows) {
    std::stable_sort(rows.begin(), rows.end(), [](const SweepRecord& a, const SweepRecord& b) {
        return std::tie(a.r, a.s, a.J, a.epsilon) < std::tie(b.r, b.s, b.J, b.epsilon);
    });
    std::string out = std::string(kSweepHeader) + "\n";
    for (const auto& r : rows) out += sweep_row(r) + "\n";
    write_atomic(path, out);
}

json fit_sweep(const std::vector<SweepRecord>& rows) {
    std::map<std::pair<int, int>, std::vector<const SweepRecord*>> by_res;
    for (const auto& r : rows) by_res[{r.r, r.s}].push_back(&r);

    json fits = json::array();
    for (const auto& [key, recs] : by_res) {
        const std::string label = std::to_string(key.first) + ":" + std::to_string(key.second);
        std::vector<double> J_list;
        for (const auto* r : recs) {
            if (std::find(J_list.begin(), J_list.end(), r->J) == J_list.end()) J_list.push_back(r->J);
        }
        std::sort(J_list.begin(), J_list.end());

        auto emit = [&](const std::string& quantity, const std::vector<double>& x, const std::vector<double>& y) {
            json e = {{"resonance", label}, {"quantity", quantity}};
            try {
                const PowerLawFit f = loglog_fit(x, y);
                e["slope"] = f.slope;
                e["intercept"] = f.intercept;
                e["residual_rms"] = f.residual_rms;
                e["n_points"] = f.n_points;
                e["J_list"] = J_list;
            } catch (const Error& err) {
                e["error"] = std::string(to_string(err.kind())) + ": " + err.what();
            }
            fits.push_back(e);
        };

        // Classical columns are J-independent: one sample per epsilon.
        std::map<double, std::pair<double, double>> per_eps;
        for (const auto* r : recs) {
            if (r->status != "ok" || !r->rat || !r->area || !(r->epsilon > 0.0)) continue;
            per_eps.emplace(r->epsilon, std::make_pair(0.5 * *r->rat, *r->area));
        }
        std::vector<double> eps, K, area;
        for (const auto& [e, v] : per_eps) {
            eps.push_back(e);
            K.push_back(v.first);
            area.push_back(v.second);
        }
        emit("K", eps, K);
        emit("area", eps, area);

        std::map<double, double> per_J;
        for (const auto* r : recs) {
            if (r->epsilon_max_fit) per_J.emplace(r->J, *r->epsilon_max_fit);
        }
        std::vector<double> Js, em;
        for (const auto& [J, e] : per_J) {
            Js.push_back(J);
            em.push_back(e);
        }
        emit("epsilon_max", Js, em);
    }
    return fits;
}

}  // namespace spinrat::io
