#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "ssid/bounds.hpp"
#include "ssid/metrics.hpp"

namespace ssid {

struct Preset {
  std::string name;
  std::string description;
  StateSpace system;
  int f = 2;
  double c_p = 1.0;
};

const std::vector<Preset>& presets();
/// Throws ConfigError for unknown names.
const Preset& find_preset(const std::string& name);

/// Past horizon rule: either a fixed p, or p = max(n+1, ceil(c_p·log N)).
struct PRule {
  std::optional<int> fixed;
  double c_p = 1.0;

  int horizon(std::int64_t N, Eigen::Index n) const;
};

struct ExperimentConfig {
  std::string preset;  // empty when `system` was given explicitly
  StateSpace system;
  std::vector<std::int64_t> n_grid;
  int trials = 1;
  PRule p_rule;
  int f = 2;
  double delta = 0.1;
  std::uint64_t master_seed = 0;
  double c_universal = 1.0;
  std::filesystem::path output_dir = "out";

  /// Throws ConfigError.
  void validate() const;
  HankelParams horizons(std::int64_t N) const;
};

ExperimentConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ExperimentConfig& cfg);
/// Preset defaults for the grid-free fields (f, c_p); the caller supplies the grid.
ExperimentConfig config_for_preset(const std::string& name);

struct TrialRecord {
  std::int64_t N = 0;
  int trial = 0;
  std::uint64_t seed = 0;
  ErrorRecord errors;
  double bound_total = 0.0;
  std::string status = "ok";

  bool ok() const { return status == "ok"; }
};

/// Per grid point state shared by all its trials: filter, horizons, exact G and its
/// reference realization, and the full-form bound report.
struct GridPoint {
  std::int64_t N = 0;
  HankelParams hp;
  Matrix g;
  Realization reference;
  BoundReport bound;
};

struct Experiment {
  ExperimentConfig cfg;
  SteadyKalman kf;
  std::vector<GridPoint> grid;
};

Experiment prepare_experiment(const ExperimentConfig& cfg);

std::uint64_t trial_seed(std::uint64_t master_seed, std::int64_t N, int trial_index);

/// One Monte Carlo cell. Stage failures are recorded in `status`, never thrown.
TrialRecord run_trial(const Experiment& ex, std::size_t grid_index, int trial_index);
TrialRecord run_trial(const ExperimentConfig& cfg, std::int64_t N, int trial_index);

/// All (N, trial) cells in grid-major order. jobs > 1 fans the cells out over OpenMP
/// threads; the result does not depend on jobs.
std::vector<TrialRecord> run_cells(const Experiment& ex, int jobs);
/// Plain loop over the cells; kept as the reference for run_cells.
std::vector<TrialRecord> run_cells_serial(const Experiment& ex);

struct GridSummary {
  std::int64_t N = 0;
  int p = 0;
  int trials = 0;
  int succeeded = 0;
  double median_err_g = 0.0;
  double q25_err_g = 0.0;
  double q75_err_g = 0.0;
  double median_err_a = 0.0;
  double median_err_c = 0.0;
  double median_err_k = 0.0;
  double pe_frequency = 0.0;         // pe_y ∧ pe_e
  double pe_margin_frequency = 0.0;  // pe_margin ≥ 0
  double coverage = 0.0;             // err_g ≤ bound_total
  double success_fraction() const { return trials > 0 ? static_cast<double>(succeeded) / trials : 0.0; }
};

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double stderr_slope = 0.0;
  int points = 0;
};

struct SweepResult {
  ExperimentConfig cfg;
  std::vector<TrialRecord> trials;
  std::vector<GridSummary> summary;
  std::vector<BoundReport> bounds;
  SlopeFit fit;
  double wall_seconds = 0.0;
};

std::vector<GridSummary> summarize(const std::vector<TrialRecord>& trials, const Experiment& ex);
/// OLS of log(median err_g) on log N over grid points where ≥ 90% of trials succeeded.
SlopeFit fit_slope(const std::vector<GridSummary>& summary);
/// Standard deviation of the fitted slope over bootstrap resamples of trials within each grid point.
double bootstrap_slope_se(const std::vector<TrialRecord>& trials, int resamples, std::uint64_t seed);

SweepResult sweep(const ExperimentConfig& cfg, int jobs = 1);

/// Trial CSV: N,trial,seed,err_g,err_a,err_c,err_k,err_markov,err_spectrum,pe_y,pe_e,pe_margin,bound_total,status
void write_trials_csv(std::ostream& os, const std::vector<TrialRecord>& trials);
nlohmann::json summary_json(const SweepResult& result);
/// Writes trials.csv and summary.json into cfg.output_dir. Throws IoError.
void write_sweep_outputs(const SweepResult& result);

struct MartingaleExperiment {
  int horizon = 500;
  int seeds = 2000;
  double delta = 0.1;
  std::uint64_t master_seed = 0;
};

struct MartingaleResult {
  int seeds = 0;
  int violations = 0;
  double frequency = 0.0;
  double standard_error = 0.0;  // binomial SE at the nominal δ
  bool within_floor = false;    // frequency ≤ δ + 3·SE
};

/// Scalar check of the self-normalized bound with X_t = η_{t−1}, V = 1, r = m = 1; a seed
/// violates if the squared normalized sum exceeds the envelope at any t ≤ horizon.
MartingaleResult run_martingale_experiment(const MartingaleExperiment& cfg, int jobs = 1);

struct CoverageRow {
  std::int64_t N = 0;
  int p = 0;
  int trials = 0;
  double bound_coverage = 0.0;
  double bound_floor = 0.0;  // total_probability
  double pe_frequency = 0.0;
  double pe_floor = 0.0;     // clamped 1 − δ_N − 2δ
  double pe_margin_frequency = 0.0;
  double binomial_se = 0.0;
  Thresholds thresholds;
  bool clears_thresholds = false;
  bool coverage_ok = false;
};

struct CoverageReport {
  std::vector<CoverageRow> rows;
  MartingaleResult martingale;
  SweepResult sweep;
};

CoverageReport verify_bounds(const ExperimentConfig& cfg, int jobs = 1, const MartingaleExperiment& mart = {});
nlohmann::json coverage_json(const CoverageReport& report);

/// Version string baked in at configure time.
const char* version_string();

}  // namespace ssid
