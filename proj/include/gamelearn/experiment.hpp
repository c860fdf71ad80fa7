#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gamelearn/coverage.hpp"
#include "gamelearn/loglinear.hpp"
#include "gamelearn/qlearning.hpp"
#include "gamelearn/worth_field.hpp"

namespace gamelearn {

enum class Algorithm { lll, blll, psblll, ql, soql };
enum class EnvironmentMode { known, estimated };

std::string to_string(Algorithm a);
std::string to_string(EnvironmentMode m);
Algorithm parse_algorithm(const std::string& s);
EnvironmentMode parse_environment(const std::string& s);

struct EstimatorConfig {
  double f_mode_percentile = 0.6;  // f_mode is this quantile of the robot's observed worths
  std::size_t V = 3;
  std::size_t n_aic = 50;
  std::size_t em_iterations = 10;
  double covariance_floor = 1.0 / 12.0;
  std::optional<double> aic_temperature;  // defaults to the learning temperature
};

struct ExperimentConfig {
  std::string label;
  Algorithm algorithm = Algorithm::psblll;
  EnvironmentMode environment = EnvironmentMode::known;
  std::size_t grid = 40;
  std::size_t robots = 5;
  // Field: explicit components, or a generated scenario from scenario_seed
  // (defaults to the run seed).
  std::vector<GaussianComponent> components;
  bool zero_field = false;  // no worth anywhere; overrides the above
  std::optional<std::uint64_t> scenario_seed;
  ScenarioOptions scenario;
  double temperature = 0.1;
  CoverageParams coverage;
  RevisionPolicy revision;
  SoqlParams soql;
  EstimatorConfig estimator;
  std::vector<std::uint64_t> seeds{1};
  std::size_t iterations = 20000;
  std::size_t steady_window = 200;
  double steady_tolerance = 1e-4;  // relative to the field's total mass
  bool stop_at_steady = true;

  void validate() const;
};

// JSON round trip; unknown keys raise ConfigError naming the key.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);
std::string experiment_config_to_json(const ExperimentConfig& config);

// The field a run with this config and seed uses.
WorthField scenario_field(const ExperimentConfig& config, std::uint64_t seed);

struct IterationRow {
  std::size_t n = 0;
  double covered = 0.0;        // sum of C^i at the new positions, true field
  double potential = 0.0;      // sum of u^i over the transition, true field
  double estimated = 0.0;      // sum of u^i as seen by each robot's own raster
  std::size_t active = 0;      // awake robots (log-linear) or perturbed draws (Q)
  double diagnostic = 0.0;     // mean component count (estimated field) or mean max-norm of X (Q)
  std::vector<std::size_t> positions;
};

struct RunRecord {
  std::string label;
  Algorithm algorithm = Algorithm::psblll;
  std::uint64_t seed = 0;
  std::size_t side = 0;
  double total_mass = 0.0;
  std::vector<std::size_t> initial_positions;
  double initial_covered = 0.0;
  std::vector<IterationRow> rows;
  bool reached_steady_state = false;
  double wall_seconds = 0.0;
  std::vector<std::vector<std::size_t>> flags;  // final flag cells per robot

  double final_covered() const { return rows.empty() ? initial_covered : rows.back().covered; }
  std::vector<double> covered_series() const;
};

RunRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed);

// True when the spread of the trailing window is at most tol.
bool steady_state(std::span<const double> series, std::size_t window, double tol);

// First iteration (1-based) whose covered worth reaches fraction * final.
std::size_t iterations_to_fraction(const RunRecord& record, double fraction);

struct SweepCell {
  std::size_t config_index = 0;
  std::uint64_t seed = 0;
  std::optional<RunRecord> record;
  std::string error;
};

struct Band {
  std::vector<double> mean, low, high;
};

struct SweepResult {
  std::vector<ExperimentConfig> configs;
  std::vector<SweepCell> cells;  // config-major, then seed order
  // One band per config, over iterations 0..longest run (shorter runs hold
  // their last value).
  std::vector<Band> bands;
};

// Runs every config against every seed on `threads` workers. Failed cells keep
// their error message and the sweep carries on.
SweepResult sweep(const std::vector<ExperimentConfig>& configs, std::span<const std::uint64_t> seeds,
                  std::size_t threads = 0);

Band covered_band(std::span<const RunRecord> records);

}  // namespace gamelearn
