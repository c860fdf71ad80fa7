// gamelab: run coverage-learning experiments, sweeps and stability analyses.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gamelearn/error.hpp"
#include "gamelearn/experiment.hpp"
#include "gamelearn/game_config.hpp"
#include "gamelearn/report.hpp"
#include "gamelearn/stability.hpp"

namespace fs = std::filesystem;
using namespace gamelearn;

namespace {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;
  std::string out_dir = "out";
};

void apply(ExperimentConfig& c, const Overrides& o) {
  if (o.seed) c.seeds = {*o.seed};
  if (o.iterations) c.iterations = *o.iterations;
  if (c.label.empty()) c.label = to_string(c.algorithm);
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  return out;
}

std::string stem(const ExperimentConfig& c, std::uint64_t seed) { return c.label + "_seed" + std::to_string(seed); }

int cmd_run(const std::string& config_path, const Overrides& o) {
  ExperimentConfig c = load_experiment_config(config_path);
  apply(c, o);
  fs::create_directories(o.out_dir);
  for (std::uint64_t seed : c.seeds) {
    const RunRecord r = run_experiment(c, seed);
    const fs::path base = fs::path(o.out_dir) / stem(c, seed);
    auto csv = open_out(base.string() + ".csv");
    write_run_csv(csv, r);
    auto svg = open_out(base.string() + "_final.svg");
    svg << field_svg(scenario_field(c, seed), &r, c.label + " seed " + std::to_string(seed));
    std::printf("%s seed %llu: %zu iterations, covered %.6g of %.6g (initial %.6g)%s, %.2fs\n", c.label.c_str(),
                static_cast<unsigned long long>(seed), r.rows.size(), r.final_covered(), r.total_mass,
                r.initial_covered, r.reached_steady_state ? ", steady" : "", r.wall_seconds);
  }
  return 0;
}

int cmd_sweep(const std::vector<std::string>& config_paths, std::vector<std::uint64_t> seeds, std::size_t threads,
              const Overrides& o) {
  std::vector<ExperimentConfig> configs;
  for (const auto& p : config_paths) {
    configs.push_back(load_experiment_config(p));
    apply(configs.back(), o);
  }
  if (seeds.empty()) seeds = o.seed ? std::vector<std::uint64_t>{*o.seed} : configs.front().seeds;
  fs::create_directories(o.out_dir);
  const SweepResult result = sweep(configs, seeds, threads);
  const fs::path dir(o.out_dir);
  {
    auto out = open_out(dir / "band.csv");
    write_band_csv(out, result);
  }
  {
    auto out = open_out(dir / "summary.csv");
    write_sweep_summary_csv(out, result);
  }
  {
    auto out = open_out(dir / "band.svg");
    out << band_svg(result, "covered worth, mean and min/max over " + std::to_string(seeds.size()) + " seeds");
  }
  int failures = 0;
  for (const auto& cell : result.cells) {
    const auto& cfg = result.configs[cell.config_index];
    if (!cell.record) {
      ++failures;
      std::fprintf(stderr, "%s seed %llu failed: %s\n", cfg.label.c_str(), static_cast<unsigned long long>(cell.seed),
                   cell.error.c_str());
      continue;
    }
    auto out = open_out(dir / (stem(cfg, cell.seed) + ".csv"));
    write_run_csv(out, *cell.record);
  }
  for (std::size_t c = 0; c < result.configs.size(); ++c) {
    const auto& b = result.bands[c];
    if (b.mean.empty()) continue;
    std::printf("%-16s final covered mean %.6g [%.6g, %.6g]\n", result.configs[c].label.c_str(), b.mean.back(),
                b.low.back(), b.high.back());
  }
  return failures == 0 ? 0 : 3;
}

int cmd_oracle(const std::string& spec_path, std::vector<double> epsilons, const std::string& out_dir) {
  GameSpec spec = load_game_spec(spec_path);
  if (!epsilons.empty()) spec.epsilons = epsilons;
  const Game& g = spec.game;
  const std::size_t states = g.joint_count();
  if (states > 20000) throw ScaleError("joint action space too large for exact analysis");
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);

  const auto report = validate_constraints(spec.constraints);
  std::printf("players %zu, joint actions %zu, constraints %s\n", g.num_players(), states,
              report.ok() ? "ok" : "NOT connected/symmetric");

  const auto phi = construct_potential(g, 1e-9);
  if (phi) {
    std::size_t best = 0;
    for (std::size_t s = 1; s < phi->size(); ++s) {
      if ((*phi)[s] > (*phi)[best]) best = s;
    }
    std::printf("exact potential found; maximiser %s (potential %.6g)\n", g.format(g.decode(best)).c_str(),
                (*phi)[best]);
  } else {
    std::printf("no exact potential\n");
  }

  {
    auto out = open_out(dir / "resistance.csv");
    out << "source,target,resistance\n";
    for (std::size_t s = 0; s < states; ++s) {
      const auto a = g.decode(s);
      for (std::size_t t = 0; t < states; ++t) {
        if (s == t) continue;
        const auto b = g.decode(t);
        try {
          const auto r = resistance(g, spec.constraints, a, b);
          out << '"' << g.format(a) << "\",\"" << g.format(b) << "\"," << format_double(r.resistance) << '\n';
        } catch (const InfeasibleTransition&) {
        }
      }
    }
  }

  if (is_separable(g)) {
    const auto l2 = verify_resistance_identity(g, spec.constraints);
    std::printf("resistance/potential identity: %zu transition pairs, max residual %.3g, %zu violations\n",
                l2.transitions_checked, l2.max_residual, l2.violations.size());
  } else {
    std::printf("game is not separable; skipping the resistance/potential identity check\n");
  }

  const auto stable = stochastically_stable_states(g, spec.constraints, spec.wake, spec.epsilons, spec.mass_threshold);
  {
    auto out = open_out(dir / "stationary.csv");
    out << "joint";
    for (double e : stable.epsilons) out << ",eps_" << format_double(e);
    out << '\n';
    for (std::size_t s = 0; s < states; ++s) {
      out << '"' << g.format(g.decode(s)) << '"';
      for (const auto& d : stable.distributions) out << ',' << format_double(d[s]);
      out << '\n';
    }
  }
  std::printf("stationary mass at the smallest epsilon (%.3g):\n", stable.epsilons.back());
  for (std::size_t s = 0; s < states; ++s) {
    const double m = stable.distributions.back()[s];
    if (m >= 1e-3) std::printf("  %-24s %.6f\n", g.format(g.decode(s)).c_str(), m);
  }
  std::printf("stochastically stable:");
  for (std::size_t s : stable.stable) std::printf(" %s", g.format(g.decode(s)).c_str());
  std::printf("\n");
  return 0;
}

int cmd_scenario(std::optional<std::string> config_path, std::uint64_t seed, std::size_t grid,
                 const std::string& out_dir) {
  ExperimentConfig c;
  if (config_path) c = load_experiment_config(*config_path);
  else c.grid = grid;
  const WorthField field = scenario_field(c, seed);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  {
    auto out = open_out(dir / ("field_seed" + std::to_string(seed) + ".csv"));
    write_raster_csv(out, field);
  }
  {
    auto out = open_out(dir / ("field_seed" + std::to_string(seed) + ".svg"));
    out << field_svg(field, nullptr, "worth field, seed " + std::to_string(seed));
  }
  std::printf("%zu x %zu grid, %zu components, mass on grid %.6f\n", field.side(), field.side(),
              field.components().size(), field.total_mass());
  for (const auto& comp : field.components()) {
    std::printf("  weight %.4f mean (%.3f, %.3f) cov [%.3f %.3f %.3f]\n", comp.weight, comp.mean.x, comp.mean.y,
                comp.cov.xx, comp.cov.xy, comp.cov.yy);
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"coverage learning experiments and stability analysis"};
  app.require_subcommand(1);
  Overrides o;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> iterations;

  auto* run = app.add_subcommand("run", "run one experiment config (every listed seed)");
  std::string run_config;
  run->add_option("config", run_config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);

  auto* sw = app.add_subcommand("sweep", "run configs x seeds and write mean/min/max bands");
  std::vector<std::string> sweep_configs;
  std::vector<std::uint64_t> sweep_seeds;
  std::size_t threads = 0;
  sw->add_option("configs", sweep_configs, "experiment configs (JSON)")->required()->check(CLI::ExistingFile);
  sw->add_option("--seeds", sweep_seeds, "seed list (default: the first config's seeds)");
  sw->add_option("--threads", threads, "worker threads (0 = hardware)");

  for (auto* sub : {run, sw}) {
    sub->add_option("--seed", seed, "run this seed only");
    sub->add_option("--iterations", iterations, "iteration cap");
    sub->add_option("--out-dir", o.out_dir, "output directory")->capture_default_str();
  }

  auto* oracle = app.add_subcommand("oracle", "exact stability analysis of a small game");
  std::string spec_path;
  std::vector<double> epsilons;
  std::string oracle_out = "out";
  oracle->add_option("spec", spec_path, "game spec (JSON)")->required()->check(CLI::ExistingFile);
  oracle->add_option("--epsilons", epsilons, "noise schedule, decreasing");
  oracle->add_option("--out-dir", oracle_out, "output directory")->capture_default_str();

  auto* scen = app.add_subcommand("scenario", "generate a worth field and dump it");
  std::optional<std::string> scen_config;
  std::uint64_t scen_seed = 1;
  std::size_t scen_grid = 40;
  std::string scen_out = "out";
  scen->add_option("--config", scen_config, "take grid and field settings from a config")->check(CLI::ExistingFile);
  scen->add_option("--seed", scen_seed, "scenario seed")->capture_default_str();
  scen->add_option("--grid", scen_grid, "grid side")->capture_default_str();
  scen->add_option("--out-dir", scen_out, "output directory")->capture_default_str();

  CLI11_PARSE(app, argc, argv);
  o.seed = seed;
  o.iterations = iterations;
  try {
    if (*run) return cmd_run(run_config, o);
    if (*sw) return cmd_sweep(sweep_configs, sweep_seeds, threads, o);
    if (*oracle) return cmd_oracle(spec_path, epsilons, oracle_out);
    if (*scen) return cmd_scenario(scen_config, scen_seed, scen_grid, scen_out);
  } catch (const Error& e) {
    std::fprintf(stderr, "gamelab: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "gamelab: unexpected failure: %s\n", e.what());
    return 2;
  }
  return 1;
}
