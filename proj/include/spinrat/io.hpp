// Run configuration, spectrum cache and CSV/JSON emission.

#pragma once

#include "spinrat/analysis.hpp"

#include "json.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace spinrat::io {

// Shortest representation that round-trips to the same double.
std::string format_double(double v);
std::string format_optional(const std::optional<double>& v);

// ---- configuration -------------------------------------------------------

struct ModelConfig {
    std::vector<double> J_list{60, 90, 150, 300};
    Coupling coupling;
};

struct ResonanceConfig {
    int r = 1;
    int s = 1;
    std::optional<double> E_R;       // one of E_R / T_target; E_R defaults to -0.723276
    std::optional<double> T_target;  // orbit period T(E_R)
};

struct DriveConfig {
    std::optional<double> tau;   // default: calibrated per J (quantum), s T(E_R)/r (classical)
    std::vector<double> eps_grid;
};

struct NumericsConfig {
    double drift_tol = 1e-10;
    double quad_tol = 1e-13;
    double z_tol = 1e-8;
    double jump_threshold = 5.0;  // multiple of the median step of Delta H0
    std::size_t n_grid = 160;
    std::size_t n_iter = 2000;
    double fd_step = 1e-6;
    double overlap_floor = 0.5;
    PairTracking tracking_mode = PairTracking::Projection;
};

struct PoincareConfig {
    std::vector<PhasePoint> seeds;
    std::size_t n_iter = 500;
};

struct OutputConfig {
    std::filesystem::path directory = "out";
    std::vector<std::string> formats{"csv", "json"};
};

struct RunConfig {
    ModelConfig model;
    ResonanceConfig resonance;
    DriveConfig drive;
    NumericsConfig numerics;
    PoincareConfig poincare;
    OutputConfig output;

    std::vector<SpinSize> spins() const;
    double resonant_energy() const;  // E_R, solving T(E) = T_target when given
    SweepOptions sweep_options(unsigned workers) const;
    ResonanceTemplate resonance_template() const;
};

// Default epsilon grid for an r:s resonance (20 points per decade).
std::vector<double> default_eps_grid(int r);

// Validates against the schema; unknown keys and wrong types throw Config.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);
// Resolved configuration including every defaulted value.
nlohmann::json to_json(const RunConfig& cfg);

// ---- spectrum cache ------------------------------------------------------

enum class CacheOutcome { Hit, Miss, Corrupt };

std::filesystem::path spectrum_cache_path(const std::filesystem::path& dir, SpinSize J, const Coupling& c);
void save_spectrum(const std::filesystem::path& path, const StaticSpectrum& spec);
// nullopt when the file is missing; throws Io on corruption or mismatch.
std::optional<StaticSpectrum> load_spectrum(const std::filesystem::path& path, SpinSize J, const Coupling& c);
StaticSpectrum cached_spectrum(const std::filesystem::path& dir, SpinSize J, const Coupling& c,
                               CacheOutcome* outcome = nullptr);

// ---- tables --------------------------------------------------------------

inline constexpr const char* kPoincareHeader = "seed_id,iter,phi,z";
inline constexpr const char* kExtractionHeader =
    "J,r,s,tau,epsilon,S_plus,S_minus,trM,detM,I_rs,m_rs,K_rs,delta_rat,delta_harm";
inline constexpr const char* kSweepHeader =
    "J,r,s,tau,epsilon,delta_quantum_scaled,delta_rat,delta_harm,island_area,delta_phi,delta_phi_reduced,overlap_a,overlap_b,"
    "epsilon_max_fit,epsilon_max_crossing,status";
inline constexpr const char* kSplittingHeader = "J,r,s,tau,epsilon,phi_a,phi_b,delta_phi,scaled,overlap_a,overlap_b,status";

std::string poincare_filename(double tau, double epsilon);
void write_poincare_csv(std::ostream& os, const std::vector<std::vector<PhasePoint>>& orbits);

struct ExtractionRecord {
    SpinSize J;
    int r = 1;
    int s = 1;
    double tau = 0.0;
    double epsilon = 0.0;
    IslandExtraction ex;
};
std::string extraction_row(const ExtractionRecord& rec);

struct SweepRecord {
    double J = 0.0;
    int r = 1;
    int s = 1;
    double tau = 0.0;
    double epsilon = 0.0;
    std::optional<double> quantum_scaled, rat, harm, area, delta_phi, delta_phi_reduced;
    double overlap_a = 0.0;
    double overlap_b = 0.0;
    std::optional<double> epsilon_max_fit, epsilon_max_crossing;
    std::string status = "ok";
};

std::vector<SweepRecord> sweep_records(const SplittingCurve& curve);
std::string sweep_row(const SweepRecord& rec);
// Rows of a sweep CSV written by sweep_row; throws Io on a malformed file.
std::vector<SweepRecord> read_sweep_csv(const std::filesystem::path& path);
// Sorted by (r, s, J, epsilon); rewritten atomically.
void write_sweep_csv(const std::filesystem::path& path, std::vector<SweepRecord> rows);

// Fits JSON: one entry per resonance and quantity ("K", "area",
// "epsilon_max") with {resonance, quantity, slope, intercept, residual_rms,
// n_points, J_list}, or {resonance, quantity, error} when the fit is invalid.
// Rows with a status other than "ok" are excluded.
nlohmann::json fit_sweep(const std::vector<SweepRecord>& rows);

// Writes `content` to path through a temporary file and rename.
void write_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace spinrat::io
