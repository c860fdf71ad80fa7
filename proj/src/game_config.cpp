#include "gamelearn/game_config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "gamelearn/error.hpp"

namespace gamelearn {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <typename T>
T read(const json& obj, const std::string& key, const std::string& where) {
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError("bad or missing key '" + key + "' in " + where + ": " + e.what());
  }
}

GameSpec coverage_spec(const json& c) {
  reject_unknown(c, {"grid", "robots", "positions", "scenario_seed", "raster", "K", "delta", "flags"}, "coverage");
  const auto L = read<std::size_t>(c, "grid", "coverage");
  WorthField field;
  if (c.contains("raster")) {
    field = WorthField::from_raster(L, read<std::vector<double>>(c, "raster", "coverage"));
  } else {
    ScenarioOptions opt;
    field = generate_scenario(c.value("scenario_seed", std::uint64_t{1}), L, opt);
  }
  auto positions = read<std::vector<std::size_t>>(c, "positions", "coverage");
  if (c.contains("robots") && read<std::size_t>(c, "robots", "coverage") != positions.size()) {
    throw ConfigError("coverage: 'robots' does not match the number of positions");
  }
  CoverageParams params;
  params.K = c.value("K", params.K);
  params.delta = c.value("delta", params.delta);
  auto world = std::make_shared<CoverageWorld>(std::move(field), std::move(positions), params);
  if (c.contains("flags")) {
    const auto flags = read<std::vector<std::vector<std::size_t>>>(c, "flags", "coverage");
    if (flags.size() != world->robot_count()) throw ConfigError("coverage: need one flag list per robot");
    for (std::size_t i = 0; i < flags.size(); ++i) {
      for (std::size_t cell : flags[i]) world->set_flag(i, cell);
    }
  }
  GameSpec spec{world->as_game(), world->constraint_map(), {}, {1e-1, 1e-2, 1e-3}, 0.05, world};
  return spec;
}

}  // namespace

GameSpec parse_game_spec(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("game spec is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("game spec must be a JSON object");
  reject_unknown(doc,
                 {"players", "actions", "action_counts", "payoffs", "separable", "builtin", "coverage", "constraints",
                  "wake", "epsilons", "mass_threshold"},
                 "game spec");

  std::optional<GameSpec> spec;
  if (doc.contains("builtin")) {
    const auto name = read<std::string>(doc, "builtin", "game spec");
    if (name != "coverage") throw ConfigError("unknown builtin game '" + name + "'");
    if (!doc.contains("coverage")) throw ConfigError("builtin coverage game needs a 'coverage' object");
    spec = coverage_spec(doc.at("coverage"));
  } else {
    std::vector<std::size_t> counts;
    std::vector<std::vector<std::string>> labels;
    if (doc.contains("actions")) {
      labels = read<std::vector<std::vector<std::string>>>(doc, "actions", "game spec");
      for (const auto& l : labels) counts.push_back(l.size());
    } else if (doc.contains("action_counts")) {
      counts = read<std::vector<std::size_t>>(doc, "action_counts", "game spec");
    } else if (doc.contains("separable")) {
      for (const auto& row : doc.at("separable")) counts.push_back(row.size());
    } else {
      throw ConfigError("game spec needs 'actions', 'action_counts' or 'separable'");
    }
    std::vector<double> table;
    if (doc.contains("payoffs")) {
      const auto rows = read<std::vector<std::vector<double>>>(doc, "payoffs", "game spec");
      for (const auto& r : rows) {
        if (r.size() != counts.size()) throw ConfigError("payoffs: every row needs one utility per player");
        table.insert(table.end(), r.begin(), r.end());
      }
    } else if (doc.contains("separable")) {
      const auto own = read<std::vector<std::vector<double>>>(doc, "separable", "game spec");
      if (own.size() != counts.size()) throw ConfigError("separable: need one list per player");
      std::size_t joints = 1;
      for (std::size_t i = 0; i < counts.size(); ++i) {
        if (own[i].size() != counts[i]) throw ConfigError("separable: list size does not match the action count");
        joints *= counts[i];
      }
      // Decode the same way Game does: last player fastest.
      for (std::size_t index = 0; index < joints; ++index) {
        std::vector<double> row(counts.size());
        std::size_t rest = index;
        for (std::size_t i = counts.size(); i-- > 0;) {
          row[i] = own[i][rest % counts[i]];
          rest /= counts[i];
        }
        table.insert(table.end(), row.begin(), row.end());
      }
    } else {
      throw ConfigError("game spec needs 'payoffs' or 'separable'");
    }
    Game game = [&] {
      try {
        return Game::from_table(counts, std::move(table));
      } catch (const InvalidArgument& e) {
        throw ConfigError(std::string("payoffs: ") + e.what());
      }
    }();
    game.action_labels = labels;
    if (doc.contains("players")) game.player_names = read<std::vector<std::string>>(doc, "players", "game spec");
    spec = GameSpec{game, ConstrainedActionMap::complete(counts), {}, {1e-1, 1e-2, 1e-3}, 0.05, nullptr};
  }

  const std::size_t n = spec->game.num_players();
  if (doc.contains("constraints")) {
    spec->constraints =
        ConstrainedActionMap(read<std::vector<std::vector<std::vector<std::size_t>>>>(doc, "constraints", "game spec"));
    try {
      spec->constraints.check_shape(spec->game);
    } catch (const InvalidArgument& e) {
      throw ConfigError(std::string("constraints: ") + e.what());
    }
  }
  spec->wake = doc.contains("wake") ? read<std::vector<double>>(doc, "wake", "game spec") : std::vector<double>(n, 0.5);
  if (spec->wake.size() != n) throw ConfigError("wake: need one probability per player");
  if (doc.contains("epsilons")) spec->epsilons = read<std::vector<double>>(doc, "epsilons", "game spec");
  spec->mass_threshold = doc.value("mass_threshold", spec->mass_threshold);
  return std::move(*spec);
}

GameSpec load_game_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open game spec '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_game_spec(buf.str());
}

}  // namespace gamelearn
