#include "spinrat/errors.hpp"
#include "spinrat/io.hpp"

#include "doctest.h"

#include <cmath>
#include <fstream>
#include <sstream>

using namespace spinrat;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / ("spinrat_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

ErrorKind parse_error(const json& j) {
    try {
        io::parse_config(j);
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("config accepted");
    return ErrorKind::InvalidParameter;
}

}  // namespace

TEST_CASE("shortest round-trip formatting") {
    CHECK(io::format_double(0.1) == "0.1");
    CHECK(io::format_double(300.0) == "300");
    const double v = 7.90344990884333;
    CHECK(std::stod(io::format_double(v)) == v);
    CHECK(io::format_optional(std::nullopt).empty());
}

TEST_CASE("configuration defaults and overrides") {
    const io::RunConfig d = io::parse_config(json::object());
    CHECK(d.model.J_list == std::vector<double>{60, 90, 150, 300});
    CHECK(d.resonance.r == 1);
    CHECK(d.resonant_energy() == -0.723276);
    CHECK(d.drive.eps_grid == io::default_eps_grid(1));
    CHECK(d.numerics.tracking_mode == PairTracking::Projection);

    const json j = json::parse(R"({
        "model": {"J": 150, "gamma_x": -0.9},
        "resonance": {"r": 2, "s": 1, "T_target": 8.0},
        "drive": {"eps_grid": {"min": 0.01, "max": 0.1, "per_decade": 4}},
        "numerics": {"tracking_mode": "continuation", "n_grid": 200, "jump_threshold": 4},
        "poincare": {"seeds": [[3.14, -0.5]], "n_iter": 10},
        "output": {"directory": "runs/a", "formats": ["csv"]}
    })");
    const io::RunConfig c = io::parse_config(j);
    CHECK(c.model.J_list == std::vector<double>{150});
    CHECK(c.model.coupling.gamma_x == -0.9);
    CHECK(c.resonance.r == 2);
    CHECK(c.drive.eps_grid.size() == 5);
    CHECK(c.numerics.tracking_mode == PairTracking::Continuation);
    CHECK(c.sweep_options(3).extraction.n_grid == 200);
    CHECK(c.sweep_options(3).extraction.jump_factor == 4.0);
    CHECK(c.sweep_options(3).workers == 3);
    CHECK(c.poincare.seeds.size() == 1);
    CHECK(c.output.directory == fs::path("runs/a"));
    CHECK(std::abs(c.resonant_energy() - find_resonant_energy(8.0, Coupling{1.0, -0.9})) < 1e-14);

    // The echo is itself a valid config that resolves to the same values.
    const io::RunConfig again = io::parse_config(io::to_json(c));
    CHECK(io::to_json(again) == io::to_json(c));
}

TEST_CASE("configuration errors") {
    CHECK(parse_error(json::parse(R"({"modle": {}})")) == ErrorKind::Config);
    CHECK(parse_error(json::parse(R"({"model": {"J": 30, "J_list": [30]}})")) == ErrorKind::Config);
    CHECK(parse_error(json::parse(R"({"model": {"J": 0.3}})")) == ErrorKind::Config);
    CHECK(parse_error(json::parse(R"({"model": {"omega0": "one"}})")) == ErrorKind::Config);
    CHECK(parse_error(json::parse(R"({"resonance": {"E_R": -0.7, "T_target": 8}})")) == ErrorKind::Config);
    CHECK(parse_error(json::parse(R"({"drive": {"eps_grid": [0.1, 0.05]}})")) == ErrorKind::Config);
    CHECK(parse_error(json::parse(R"({"numerics": {"tracking_mode": "magic"}})")) == ErrorKind::Config);
    CHECK(parse_error(json::parse(R"({"numerics": {"n_grid": 10}})")) == ErrorKind::Config);
    CHECK(parse_error(json::parse(R"({"output": {"formats": ["xml"]}})")) == ErrorKind::Config);

    const fs::path dir = scratch_dir("config");
    std::ofstream(dir / "broken.json") << "{ not json";
    CHECK_THROWS_AS(io::load_config(dir / "broken.json"), Error);
    CHECK_THROWS_AS(io::load_config(dir / "missing.json"), Error);
}

TEST_CASE("spectrum cache round trip and corruption") {
    const fs::path dir = scratch_dir("cache");
    const SpinSize J = SpinSize::from_double(20);
    const Coupling c;
    io::CacheOutcome outcome{};
    const StaticSpectrum first = io::cached_spectrum(dir, J, c, &outcome);
    CHECK(outcome == io::CacheOutcome::Miss);
    const StaticSpectrum second = io::cached_spectrum(dir, J, c, &outcome);
    CHECK(outcome == io::CacheOutcome::Hit);
    CHECK(second.energies == first.energies);
    CHECK(second.states == first.states);
    CHECK(second.parities == first.parities);

    CHECK_FALSE(io::load_spectrum(dir / "nothing.bin", J, c).has_value());
    CHECK_THROWS_AS(io::load_spectrum(io::spectrum_cache_path(dir, J, c), SpinSize::from_double(21), c), Error);

    // Flip one byte in the payload.
    const fs::path path = io::spectrum_cache_path(dir, J, c);
    {
        std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
        f.seekp(100);
        char ch = 0;
        f.read(&ch, 1);
        f.seekp(100);
        ch = static_cast<char>(ch ^ 0x5a);
        f.write(&ch, 1);
    }
    CHECK_THROWS_AS(io::load_spectrum(path, J, c), Error);
    const StaticSpectrum third = io::cached_spectrum(dir, J, c, &outcome);
    CHECK(outcome == io::CacheOutcome::Corrupt);
    CHECK(third.energies == first.energies);
    CHECK(io::load_spectrum(path, J, c).has_value());
}

TEST_CASE("Poincare CSV") {
    std::ostringstream empty;
    io::write_poincare_csv(empty, {});
    CHECK(empty.str() == "seed_id,iter,phi,z\n");

    std::ostringstream os;
    io::write_poincare_csv(os, {{{0.5, -0.25}, {1.0, 0.125}}, {{3.0, 0.0}}});
    CHECK(os.str() == "seed_id,iter,phi,z\n0,0,0.5,-0.25\n0,1,1,0.125\n1,0,3,0\n");
    CHECK(io::poincare_filename(8.0, 0.005) == "poincare_tau8_eps0.005.csv");
}

TEST_CASE("sweep CSV round trip, ordering and fits") {
    const fs::path dir = scratch_dir("sweep");
    std::vector<io::SweepRecord> rows;
    for (double J : {90.0, 60.0}) {
        for (double eps : {0.004, 0.001, 0.002, 0.003}) {
            io::SweepRecord r;
            r.J = J;
            r.tau = 7.9;
            r.epsilon = eps;
            r.quantum_scaled = 0.01 * eps;
            r.rat = 0.1 * eps;
            r.harm = std::sqrt(eps) / J;
            r.area = 7 * std::sqrt(eps);
            r.delta_phi = 0.3 * eps;
            r.delta_phi_reduced = 0.3 * eps;
            r.overlap_a = 0.99;
            r.overlap_b = 0.98;
            r.epsilon_max_fit = 0.5 / (J * J);
            rows.push_back(r);
        }
    }
    rows.back().status = "TrackingLost";
    rows.back().quantum_scaled.reset();

    const fs::path csv = dir / "sweep.csv";
    io::write_sweep_csv(csv, rows);
    const auto back = io::read_sweep_csv(csv);
    REQUIRE(back.size() == rows.size());
    CHECK(back.front().J == 60.0);
    CHECK(back.front().epsilon == 0.001);
    for (std::size_t i = 1; i < back.size(); ++i) {
        CHECK(std::tie(back[i - 1].J, back[i - 1].epsilon) < std::tie(back[i].J, back[i].epsilon));
    }
    io::write_sweep_csv(dir / "again.csv", back);
    std::ifstream a(csv), b(dir / "again.csv");
    const std::string sa((std::istreambuf_iterator<char>(a)), {}), sb((std::istreambuf_iterator<char>(b)), {});
    CHECK(sa == sb);
    CHECK(sa.substr(0, sa.find('\n')) == io::kSweepHeader);

    const json fits = io::fit_sweep(back);
    REQUIRE(fits.size() == 3);
    CHECK(fits[0]["quantity"] == "K");
    CHECK(std::abs(fits[0]["slope"].get<double>() - 1.0) < 1e-12);
    CHECK(fits[1]["quantity"] == "area");
    CHECK(std::abs(fits[1]["slope"].get<double>() - 0.5) < 1e-12);
    CHECK(fits[2]["quantity"] == "epsilon_max");
    CHECK(fits[2].contains("error"));  // two J values only
    CHECK(fits[0]["resonance"] == "1:1");

    // A single epsilon cannot be fitted.
    std::vector<io::SweepRecord> single(back.begin(), back.begin() + 1);
    for (const auto& f : io::fit_sweep(single)) CHECK(f.contains("error"));

    std::ofstream(dir / "bad.csv") << "J,r\n1,2\n";
    CHECK_THROWS_AS(io::read_sweep_csv(dir / "bad.csv"), Error);
}
