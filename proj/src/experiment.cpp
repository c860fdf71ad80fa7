#include "gamelearn/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "gamelearn/error.hpp"
#include "gamelearn/gmm_estimator.hpp"

namespace gamelearn {

namespace {

using nlohmann::json;

// Stream ids keep the random draws of different concerns apart, so turning
// estimation on does not shift the dynamics' draws.
constexpr std::uint64_t kInitStream = 1;
constexpr std::uint64_t kDynamicsStream = 2;
constexpr std::uint64_t kEstimatorStream = 3;

}  // namespace

std::string to_string(Algorithm a) {
  switch (a) {
    case Algorithm::lll: return "lll";
    case Algorithm::blll: return "blll";
    case Algorithm::psblll: return "psblll";
    case Algorithm::ql: return "ql";
    case Algorithm::soql: return "soql";
  }
  return "?";
}

std::string to_string(EnvironmentMode m) { return m == EnvironmentMode::known ? "known" : "estimated"; }

Algorithm parse_algorithm(const std::string& s) {
  if (s == "lll") return Algorithm::lll;
  if (s == "blll") return Algorithm::blll;
  if (s == "psblll") return Algorithm::psblll;
  if (s == "ql") return Algorithm::ql;
  if (s == "soql") return Algorithm::soql;
  throw ConfigError("unknown algorithm '" + s + "' (expected lll, blll, psblll, ql or soql)");
}

EnvironmentMode parse_environment(const std::string& s) {
  if (s == "known") return EnvironmentMode::known;
  if (s == "estimated") return EnvironmentMode::estimated;
  throw ConfigError("unknown environment mode '" + s + "' (expected known or estimated)");
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& what) { throw ConfigError(what); };
  if (grid == 0) fail("grid must be positive");
  if (components.empty() && !zero_field && grid < 8) fail("generated scenarios need grid >= 8");
  if (robots == 0) fail("robots must be positive");
  if (!(temperature > 0.0)) fail("temperature must be positive");
  if (seeds.empty()) fail("seeds must not be empty");
  if (steady_window < 2) fail("steady_window must be at least 2");
  if (!(steady_tolerance >= 0.0)) fail("steady_tolerance must be non-negative");
  if (!(estimator.f_mode_percentile >= 0.0 && estimator.f_mode_percentile <= 1.0)) {
    fail("f_mode_percentile must lie in [0, 1]");
  }
  if (estimator.n_aic == 0) fail("n_aic must be positive");
  if (estimator.em_iterations == 0) fail("em_iterations must be positive");
  if (!(estimator.covariance_floor > 0.0)) fail("covariance_floor must be positive");
  if (estimator.aic_temperature && !(*estimator.aic_temperature > 0.0)) fail("aic_temperature must be positive");
  try {
    coverage.validate();
    revision.validate();
    SoqlParams s = soql;
    s.temperature = temperature;
    s.validate();
  } catch (const InvalidArgument& e) {
    fail(e.what());
  }
  if (!components.empty()) {
    try {
      WorthField check(grid, components);
    } catch (const InvalidArgument& e) {
      fail(std::string("components: ") + e.what());
    }
  }
}

// ---------------------------------------------------------------------------
// Config file

namespace {

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
void maybe(const json& obj, const char* key, T& out) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(doc,
                 {"label", "algorithm", "environment", "grid", "robots", "components", "zero_field", "scenario_seed", "scenario",
                  "temperature", "K", "delta", "motion_radius", "a1", "a2", "a3", "k", "p_min", "mu", "theta", "xi",
                  "zeta", "f_mode_percentile", "V", "n_aic", "em_iterations", "covariance_floor", "aic_temperature",
                  "seeds", "iterations", "steady_window", "steady_tolerance", "stop_at_steady"},
                 "config");
  ExperimentConfig c;
  maybe(doc, "label", c.label);
  if (doc.contains("algorithm")) c.algorithm = parse_algorithm(doc.at("algorithm").get<std::string>());
  if (doc.contains("environment")) c.environment = parse_environment(doc.at("environment").get<std::string>());
  maybe(doc, "grid", c.grid);
  maybe(doc, "robots", c.robots);
  if (doc.contains("components")) {
    for (const auto& item : doc.at("components")) {
      reject_unknown(item, {"weight", "mean", "cov"}, "components");
      GaussianComponent g;
      try {
        g.weight = item.at("weight").get<double>();
        const auto m = item.at("mean").get<std::vector<double>>();
        const auto s = item.at("cov").get<std::vector<double>>();
        if (m.size() != 2 || s.size() != 3) throw ConfigError("components: mean needs 2 values and cov 3 (xx, xy, yy)");
        g.mean = {m[0], m[1]};
        g.cov = {s[0], s[1], s[2]};
      } catch (const json::exception& e) {
        throw ConfigError(std::string("components: ") + e.what());
      }
      c.components.push_back(g);
    }
  }
  maybe(doc, "zero_field", c.zero_field);
  if (doc.contains("scenario_seed")) c.scenario_seed = doc.at("scenario_seed").get<std::uint64_t>();
  if (doc.contains("scenario")) {
    const auto& s = doc.at("scenario");
    reject_unknown(s, {"min_components", "max_components", "margin", "sigma_low", "sigma_high", "dirichlet_alpha"},
                   "scenario");
    maybe(s, "min_components", c.scenario.min_components);
    maybe(s, "max_components", c.scenario.max_components);
    maybe(s, "margin", c.scenario.margin);
    maybe(s, "sigma_low", c.scenario.sigma_low);
    maybe(s, "sigma_high", c.scenario.sigma_high);
    maybe(s, "dirichlet_alpha", c.scenario.dirichlet_alpha);
  }
  maybe(doc, "temperature", c.temperature);
  maybe(doc, "K", c.coverage.K);
  maybe(doc, "delta", c.coverage.delta);
  maybe(doc, "motion_radius", c.coverage.motion_radius);
  maybe(doc, "a1", c.revision.a1);
  maybe(doc, "a2", c.revision.a2);
  maybe(doc, "a3", c.revision.a3);
  maybe(doc, "k", c.revision.k);
  maybe(doc, "p_min", c.revision.p_min);
  maybe(doc, "mu", c.soql.mu);
  maybe(doc, "theta", c.soql.theta);
  maybe(doc, "xi", c.soql.xi);
  maybe(doc, "zeta", c.soql.zeta);
  maybe(doc, "f_mode_percentile", c.estimator.f_mode_percentile);
  maybe(doc, "V", c.estimator.V);
  maybe(doc, "n_aic", c.estimator.n_aic);
  maybe(doc, "em_iterations", c.estimator.em_iterations);
  maybe(doc, "covariance_floor", c.estimator.covariance_floor);
  if (doc.contains("aic_temperature")) c.estimator.aic_temperature = doc.at("aic_temperature").get<double>();
  maybe(doc, "seeds", c.seeds);
  maybe(doc, "iterations", c.iterations);
  maybe(doc, "steady_window", c.steady_window);
  maybe(doc, "steady_tolerance", c.steady_tolerance);
  maybe(doc, "stop_at_steady", c.stop_at_steady);
  c.validate();
  return c;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string experiment_config_to_json(const ExperimentConfig& c) {
  json doc;
  doc["label"] = c.label;
  doc["algorithm"] = to_string(c.algorithm);
  doc["environment"] = to_string(c.environment);
  doc["grid"] = c.grid;
  doc["robots"] = c.robots;
  if (!c.components.empty()) {
    json comps = json::array();
    for (const auto& g : c.components) {
      comps.push_back({{"weight", g.weight}, {"mean", {g.mean.x, g.mean.y}}, {"cov", {g.cov.xx, g.cov.xy, g.cov.yy}}});
    }
    doc["components"] = comps;
  }
  if (c.zero_field) doc["zero_field"] = true;
  if (c.scenario_seed) doc["scenario_seed"] = *c.scenario_seed;
  doc["scenario"] = {{"min_components", c.scenario.min_components}, {"max_components", c.scenario.max_components},
                     {"margin", c.scenario.margin},                 {"sigma_low", c.scenario.sigma_low},
                     {"sigma_high", c.scenario.sigma_high},         {"dirichlet_alpha", c.scenario.dirichlet_alpha}};
  doc["temperature"] = c.temperature;
  doc["K"] = c.coverage.K;
  doc["delta"] = c.coverage.delta;
  doc["motion_radius"] = c.coverage.motion_radius;
  doc["a1"] = c.revision.a1;
  doc["a2"] = c.revision.a2;
  doc["a3"] = c.revision.a3;
  doc["k"] = c.revision.k;
  doc["p_min"] = c.revision.p_min;
  doc["mu"] = c.soql.mu;
  doc["theta"] = c.soql.theta;
  doc["xi"] = c.soql.xi;
  doc["zeta"] = c.soql.zeta;
  doc["f_mode_percentile"] = c.estimator.f_mode_percentile;
  doc["V"] = c.estimator.V;
  doc["n_aic"] = c.estimator.n_aic;
  doc["em_iterations"] = c.estimator.em_iterations;
  doc["covariance_floor"] = c.estimator.covariance_floor;
  if (c.estimator.aic_temperature) doc["aic_temperature"] = *c.estimator.aic_temperature;
  doc["seeds"] = c.seeds;
  doc["iterations"] = c.iterations;
  doc["steady_window"] = c.steady_window;
  doc["steady_tolerance"] = c.steady_tolerance;
  doc["stop_at_steady"] = c.stop_at_steady;
  return doc.dump(2);
}

WorthField scenario_field(const ExperimentConfig& config, std::uint64_t seed) {
  if (config.zero_field) return WorthField(config.grid, {});
  if (!config.components.empty()) return WorthField(config.grid, config.components);
  return generate_scenario(config.scenario_seed.value_or(seed), config.grid, config.scenario);
}

// ---------------------------------------------------------------------------
// Runs

std::vector<double> RunRecord::covered_series() const {
  std::vector<double> s;
  s.reserve(rows.size());
  for (const auto& r : rows) s.push_back(r.covered);
  return s;
}

bool steady_state(std::span<const double> series, std::size_t window, double tol) {
  if (window < 2) throw InvalidArgument("steady-state window must be at least 2");
  if (series.size() < window) return false;
  const auto tail = series.subspan(series.size() - window);
  const auto [lo, hi] = std::minmax_element(tail.begin(), tail.end());
  return *hi - *lo <= tol;
}

std::size_t iterations_to_fraction(const RunRecord& record, double fraction) {
  const double target = fraction * record.final_covered();
  if (record.initial_covered >= target) return 0;
  for (const auto& r : record.rows) {
    if (r.covered >= target) return r.n;
  }
  return record.rows.empty() ? 0 : record.rows.back().n;
}

namespace {

// What one robot knows: sensing maxima for its revision probability and, in
// estimated-field mode, its observation log and mixture estimate.
struct RobotBelief {
  double max_f = 0.0;
  double max_g = 0.0;
  ObservationLog log;
  std::vector<double> observed;
  GmmEstimate estimate;
  std::vector<double> raster;
};

class Runner {
 public:
  Runner(const ExperimentConfig& config, std::uint64_t seed)
      : config_(config),
        seed_(seed),
        world_(make_world(config, seed)),
        constraints_(world_.constraint_map()),
        beliefs_(config.robots),
        rng_(seed, kDynamicsStream),
        estimator_rng_(seed, kEstimatorStream) {
    const std::size_t L = config.grid;
    model_.em_iterations = config.estimator.em_iterations;
    model_.partial.em.covariance_floor = config.estimator.covariance_floor;
    model_.temperature = config.estimator.aic_temperature.value_or(config.temperature);
    model_.split_offset = 0.005 * std::sqrt(2.0) * static_cast<double>(L);
  }

  RunRecord run() {
    const auto start = std::chrono::steady_clock::now();
    RunRecord rec;
    rec.label = config_.label;
    rec.algorithm = config_.algorithm;
    rec.seed = seed_;
    rec.side = config_.grid;
    rec.total_mass = world_.field().total_mass();
    rec.initial_positions = world_.positions();
    rec.initial_covered = world_.total_covered();
    for (std::size_t i = 0; i < config_.robots; ++i) {
      world_.lay_flag(i);
      sense(i);
      if (estimated()) observe(i);
    }
    const bool q_family = config_.algorithm == Algorithm::ql || config_.algorithm == Algorithm::soql;
    if (q_family) run_q(rec);
    else run_loglinear(rec);
    for (std::size_t i = 0; i < config_.robots; ++i) {
      std::vector<std::size_t> cells;
      for (std::size_t c = 0; c < world_.cell_count(); ++c) {
        if (world_.has_flag(i, c)) cells.push_back(c);
      }
      rec.flags.push_back(std::move(cells));
    }
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
  }

 private:
  static CoverageWorld make_world(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    WorthField field = scenario_field(config, seed);
    Rng init(seed, kInitStream);
    std::vector<std::size_t> positions(config.robots);
    for (auto& p : positions) p = init.uniform_index(field.cell_count());
    return CoverageWorld(std::move(field), std::move(positions), config.coverage);
  }

  bool estimated() const { return config_.environment == EnvironmentMode::estimated; }

  void sense(std::size_t i) {
    const std::size_t cell = world_.positions()[i];
    auto& b = beliefs_[i];
    b.max_f = std::max(b.max_f, world_.field().value(cell));
    b.max_g = std::max(b.max_g, world_.field().local_gradient(cell));
  }

  double wake_probability(std::size_t i) const {
    const std::size_t cell = world_.positions()[i];
    const auto& b = beliefs_[i];
    const double F = b.max_f > 0.0 ? std::min(1.0, world_.field().value(cell) / b.max_f) : 0.0;
    const double G = b.max_g > 0.0 ? std::min(1.0, world_.field().local_gradient(cell) / b.max_g) : 0.0;
    return revision_probability(config_.revision, F, G);
  }

  void observe(std::size_t i) {
    const std::size_t cell = world_.positions()[i];
    auto& b = beliefs_[i];
    const double f = world_.field().value(cell);
    b.observed.push_back(f);
    std::vector<double> sorted = b.observed;
    const auto k = static_cast<std::size_t>(config_.estimator.f_mode_percentile * static_cast<double>(sorted.size() - 1));
    std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
    const double f_mode = sorted[k];
    const std::size_t m = f_mode > 0.0 ? worth_weighted_multiplicity(f, f_mode, config_.estimator.V) : 1;
    b.log.add_cell(cell, world_.field().centroid(cell), static_cast<double>(m));
    if (b.estimate.count() == 0) {
      b.estimate = single_component_fit(b.log, model_.partial.em);
    }
    b.estimate = em_iterate(b.log, b.estimate, config_.estimator.em_iterations, model_.partial.em).estimate;
    refresh_raster(i);
  }

  void refresh_raster(std::size_t i) {
    auto& b = beliefs_[i];
    b.raster.resize(world_.cell_count());
    for (std::size_t c = 0; c < b.raster.size(); ++c) b.raster[c] = b.estimate.density(world_.field().centroid(c));
  }

  void model_selection_round() {
    for (std::size_t i = 0; i < config_.robots; ++i) {
      auto& b = beliefs_[i];
      if (b.log.empty()) continue;
      auto outcome = propose_component_count(b.estimate, b.log, model_, estimator_rng_);
      b.estimate = std::move(outcome.estimate);
      refresh_raster(i);
    }
  }

  std::vector<std::span<const double>> rasters() const {
    std::vector<std::span<const double>> r;
    for (std::size_t i = 0; i < config_.robots; ++i) {
      r.emplace_back(estimated() ? std::span<const double>(beliefs_[i].raster)
                                 : std::span<const double>(world_.field().raster()));
    }
    return r;
  }

  bool finish_row(RunRecord& rec, IterationRow row) {
    row.covered = world_.total_covered();
    row.positions = world_.positions();
    rec.rows.push_back(std::move(row));
    series_.push_back(rec.rows.back().covered);
    if (config_.stop_at_steady &&
        steady_state(series_, config_.steady_window, config_.steady_tolerance * rec.total_mass)) {
      rec.reached_steady_state = true;
      return true;
    }
    return false;
  }

  void run_loglinear(RunRecord& rec) {
    LoglinearState state;
    state.joint = world_.positions();
    state.temperature = config_.temperature;
    std::vector<double> wake(config_.robots);
    for (std::size_t n = 1; n <= config_.iterations; ++n) {
      if (estimated() && n > 1 && (n - 1) % config_.estimator.n_aic == 0) model_selection_round();
      const auto views = rasters();
      const Game game = world_.as_game(views);
      const JointAction before = state.joint;
      StepOutcome step;
      switch (config_.algorithm) {
        case Algorithm::lll: step = lll_step(game, state, rng_); break;
        case Algorithm::blll: step = blll_step(game, state, constraints_, rng_); break;
        default:
          for (std::size_t i = 0; i < config_.robots; ++i) wake[i] = wake_probability(i);
          step = psblll_step(game, state, constraints_, wake, rng_);
      }
      IterationRow row;
      row.n = n;
      row.active = step.awake.size();
      row.potential = world_.potential(state.joint, before);
      for (std::size_t i = 0; i < config_.robots; ++i) {
        row.estimated += world_.utility_with(views[i], i, state.joint[i], before[i]);
      }
      world_.set_positions(state.joint);
      for (std::size_t k = 0; k < step.awake.size(); ++k) {
        const std::size_t i = step.awake[k];
        if (!step.adopted[k] || state.joint[i] == before[i]) continue;
        world_.lay_flag(i);
        if (estimated()) observe(i);
      }
      for (std::size_t i = 0; i < config_.robots; ++i) sense(i);
      if (estimated()) {
        double m = 0.0;
        for (const auto& b : beliefs_) m += static_cast<double>(b.estimate.count());
        row.diagnostic = m / static_cast<double>(config_.robots);
      }
      if (finish_row(rec, std::move(row))) break;
    }
  }

  void run_q(RunRecord& rec) {
    std::vector<std::size_t> counts(config_.robots, world_.cell_count());
    QState q = QState::initial(counts);
    SoqlParams params = config_.soql;
    params.temperature = config_.temperature;
    JointAction joint = world_.positions();
    for (std::size_t n = 1; n <= config_.iterations; ++n) {
      const Game game = world_.as_game();
      const JointAction before = joint;
      const QStepOutcome step = config_.algorithm == Algorithm::soql
                                    ? soql_episode_step(game, q, joint, params, constraints_, rng_)
                                    : ql_episode_step(game, q, joint, params, constraints_, rng_);
      IterationRow row;
      row.n = n;
      row.active = step.perturbed_player < config_.robots ? 1 : 0;
      row.potential = world_.potential(joint, before);
      row.estimated = row.potential;
      double norm = 0.0;
      for (const auto& x : q.X) norm += x.max_norm();
      row.diagnostic = norm / static_cast<double>(config_.robots);
      world_.set_positions(joint);
      for (std::size_t i = 0; i < config_.robots; ++i) world_.lay_flag(i);
      if (finish_row(rec, std::move(row))) break;
    }
  }

  const ExperimentConfig& config_;
  std::uint64_t seed_;
  CoverageWorld world_;
  ConstrainedActionMap constraints_;
  std::vector<RobotBelief> beliefs_;
  Rng rng_;
  Rng estimator_rng_;
  ModelSelectionOptions model_;
  std::vector<double> series_;
};

}  // namespace

RunRecord run_experiment(const ExperimentConfig& config, std::uint64_t seed) { return Runner(config, seed).run(); }

Band covered_band(std::span<const RunRecord> records) {
  Band band;
  if (records.empty()) return band;
  std::size_t longest = 0;
  for (const auto& r : records) longest = std::max(longest, r.rows.size());
  const std::size_t len = longest + 1;
  band.mean.assign(len, 0.0);
  band.low.assign(len, std::numeric_limits<double>::infinity());
  band.high.assign(len, -std::numeric_limits<double>::infinity());
  for (const auto& r : records) {
    for (std::size_t t = 0; t < len; ++t) {
      double v;
      if (t == 0) v = r.initial_covered;
      else if (t <= r.rows.size()) v = r.rows[t - 1].covered;
      else v = r.final_covered();
      band.mean[t] += v;
      band.low[t] = std::min(band.low[t], v);
      band.high[t] = std::max(band.high[t], v);
    }
  }
  for (double& m : band.mean) m /= static_cast<double>(records.size());
  return band;
}

SweepResult sweep(const std::vector<ExperimentConfig>& configs, std::span<const std::uint64_t> seeds,
                  std::size_t threads) {
  SweepResult result;
  result.configs = configs;
  for (std::size_t c = 0; c < configs.size(); ++c) {
    for (std::uint64_t s : seeds) result.cells.push_back({c, s, std::nullopt, {}});
  }
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, std::max<std::size_t>(1, result.cells.size()));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t k = next++; k < result.cells.size(); k = next++) {
      auto& cell = result.cells[k];
      try {
        cell.record = run_experiment(configs[cell.config_index], cell.seed);
      } catch (const std::exception& e) {
        cell.error = e.what();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();

  for (std::size_t c = 0; c < configs.size(); ++c) {
    std::vector<RunRecord> runs;
    for (const auto& cell : result.cells) {
      if (cell.config_index == c && cell.record) runs.push_back(*cell.record);
    }
    result.bands.push_back(covered_band(runs));
  }
  return result;
}

}  // namespace gamelearn
