#pragma once

// Monte-Carlo benchmark harness: scenario configuration, execution of the
// filter roster on shared simulated measurements, and report artifacts.

#include "tpmf/lgbf.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace tpmf {

struct TerrainSpec {
    /// Either an ESRI ASCII grid path or synthetic parameters.
    std::optional<std::filesystem::path> dem_path;
    std::uint64_t seed = 7;
    double extent = 8000.0;
    double cell = 20.0;
    double roughness = 0.25;
};

enum class FilterKind { lgbf_cpd, lgbf, pf_bootstrap, ukf };

struct FilterSpec {
    std::string name;
    FilterKind kind = FilterKind::lgbf_cpd;
    CpdFilterConfig cpd;
    LgbfConfig full;
    /// Particle count; 0 means "as many as the default grid has points".
    std::size_t particles = 0;
    UkfParams ukf;
};

struct ScenarioConfig {
    TerrainSpec terrain;
    std::size_t steps = 100;
    double dt = 1.0;
    GaussianMoments initial;
    Eigen::Vector4d q_diag = Eigen::Vector4d(0.25, 0.25, 0.01, 0.01);
    double sigma_alt = 3.0;
    double vel_std = 0.3;
    std::vector<FilterSpec> filters;
    std::size_t mc_runs = 10;
    std::uint64_t seed = 1;
    std::optional<std::filesystem::path> output_dir;

    CvModel model() const { return CvModel::nearly_constant_velocity(dt, q_diag); }
    MeasModel meas() const;
    void validate() const;
};

/// Canonical filter names: lgbf_cpd, lgbf, pf_bootstrap, ukf.
FilterKind parse_filter_kind(const std::string& name);
std::string filter_kind_name(FilterKind kind);
/// Display label used in the summary table ("LGbF CPD", ...).
std::string filter_label(FilterKind kind);

/// Built-in desk-scale scenario with all four filters.
ScenarioConfig default_scenario();

/// Parses a JSON scenario; missing fields take the defaults above. Errors
/// are ParseError with the offending field path (and line for syntax
/// errors).
ScenarioConfig parse_scenario(const std::string& text);
ScenarioConfig load_scenario(const std::filesystem::path& path);
nlohmann::json scenario_to_json(const ScenarioConfig& cfg);

/// Grid counts 51x51x41x41 for the full-tensor filter, 101^4 for the CP
/// filter; leaves other filters untouched.
void apply_paper_scale(ScenarioConfig& cfg);

/// Keeps only the named filters, in the given order.
void select_filters(ScenarioConfig& cfg, const std::vector<std::string>& names);

struct FilterRun {
    bool diverged = false;
    /// First step that failed, when diverged.
    std::size_t divergence_step = 0;
    std::string divergence_reason;
    /// One row per completed step, public order.
    std::vector<Eigen::Vector4d> estimates;
    std::vector<double> step_seconds;
    /// FNV-1a hash of the measurements the filter consumed.
    std::uint64_t input_hash = 0;
    /// Grid filters: largest |delta * sum - 1| over returned states, and
    /// how many states exceeded 1e-9.
    double max_mass_error = 0.0;
    std::size_t mass_violations = 0;
};

struct RunRecord {
    std::size_t index = 0;
    std::uint64_t seed = 0;
    /// Simulation retries after the truth left the map.
    std::size_t retries = 0;
    Trajectory truth;
    std::vector<FilterRun> filters;
};

struct FilterSummary {
    std::string name;
    FilterKind kind = FilterKind::lgbf_cpd;
    double rmse_pos = 0.0;
    double rmse_vel = 0.0;
    double mean_step_s = 0.0;
    std::size_t divergences = 0;
    std::size_t mass_violations = 0;
};

struct RunReport {
    ScenarioConfig config;
    std::vector<FilterSummary> summary;
    std::vector<RunRecord> runs;

    /// True when every filter diverged in every run (and there was at
    /// least one filter).
    bool universal_divergence() const;
};

RunReport run_benchmark(const ScenarioConfig& cfg);

/// Fills report.summary: root mean squared errors over all steps of the
/// non-diverged runs (position uses the 2-D Euclidean error), mean step
/// time over every completed step, divergence and mass-violation counts.
void aggregate(RunReport& report);

/// Deterministic report document (no wall-clock values).
nlohmann::json report_to_json(const RunReport& report);

/// report.json, summary.csv, timing.json and traces/run_<i>_<filter>.csv.
void emit_artifacts(const RunReport& report, const std::filesystem::path& dir);

/// Summary table row, e.g. "LGbF CPD 14.13 m, 0.80 m/s, 0.06 s".
std::string render_table_row(const std::string& label, double rmse_pos, double rmse_vel, double step_s);

struct TableRow {
    std::string label;
    double rmse_pos = 0.0;
    double rmse_vel = 0.0;
    double step_s = 0.0;
};
/// Accepts the rendered form and the unit-less "LGbF CPD 14.13, 0.80, 0.06".
TableRow parse_table_row(const std::string& row);

std::uint64_t fnv1a_measurements(const Trajectory& t);

}  // namespace tpmf
