#pragma once

#include <memory>
#include <string>
#include <vector>

#include "gamelearn/coverage.hpp"
#include "gamelearn/game.hpp"
#include "gamelearn/loglinear.hpp"

namespace gamelearn {

// A game plus everything the stability analysis needs to run on it.
struct GameSpec {
  Game game;
  ConstrainedActionMap constraints;
  std::vector<double> wake;
  std::vector<double> epsilons{1e-1, 1e-2, 1e-3};
  double mass_threshold = 0.05;
  // Set for the builtin coverage game; the game's utilities refer to it.
  std::shared_ptr<CoverageWorld> world;
};

// Parses a JSON game description. Accepted top-level keys:
//   players      optional list of names
//   actions      list of per-player action label lists, or
//   action_counts list of per-player action counts
//   payoffs      one [u_1, ..., u_N] list per joint action, last player fastest
//   separable    per-player lists of own-action utilities (instead of payoffs)
//   builtin      "coverage" (with a "coverage" object) instead of the above
//   constraints  per-player lists of reachable-action lists (default: complete)
//   wake         per-player revision probabilities (default 0.5)
//   epsilons     decreasing schedule for the stable-set analysis
//   mass_threshold
// Unknown keys raise ConfigError naming the key.
GameSpec parse_game_spec(const std::string& text);
GameSpec load_game_spec(const std::string& path);

}  // namespace gamelearn
