#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gamelearn/rng.hpp"

namespace gamelearn {

// One action index per player.
using JointAction = std::vector<std::size_t>;

// Probability weights over one player's actions.
class MixedStrategy {
 public:
  static constexpr double kTolerance = 1e-9;

  MixedStrategy() = default;
  // Throws InvalidArgument unless the weights are non-negative and sum to 1
  // within kTolerance.
  explicit MixedStrategy(std::vector<double> weights);

  static MixedStrategy uniform(std::size_t num_actions);
  static MixedStrategy pure(std::size_t num_actions, std::size_t action);

  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t action) const { return weights_[action]; }
  std::span<const double> weights() const { return weights_; }

  // ||x||_inf
  double max_norm() const;
  std::size_t sample(Rng& rng) const;

 private:
  std::vector<double> weights_;
};

// Finite normal-form game. Utilities come either from a dense table (small
// games, exhaustively analysable) or from a callback (large games such as the
// coverage game, whose joint space cannot be tabulated).
class Game {
 public:
  using UtilityFn = std::function<double(std::size_t player, std::span<const std::size_t> joint)>;

  // payoffs[encode(joint) * num_players + player]; joints are row-major with
  // the last player varying fastest.
  static Game from_table(std::vector<std::size_t> action_counts, std::vector<double> payoffs);
  static Game from_function(std::vector<std::size_t> action_counts, UtilityFn utility);

  std::size_t num_players() const { return action_counts_.size(); }
  std::size_t num_actions(std::size_t player) const { return action_counts_.at(player); }
  const std::vector<std::size_t>& action_counts() const { return action_counts_; }
  bool has_table() const { return !table_.empty(); }

  double utility(std::size_t player, std::span<const std::size_t> joint) const;

  // Size of the joint action space; throws ScaleError if it overflows size_t.
  std::size_t joint_count() const;
  std::size_t encode(std::span<const std::size_t> joint) const;
  JointAction decode(std::size_t index) const;
  bool is_valid(std::span<const std::size_t> joint) const;

  // Optional display names; empty when not supplied.
  std::vector<std::string> player_names;
  std::vector<std::vector<std::string>> action_labels;

  std::string format(std::span<const std::size_t> joint) const;

 private:
  Game() = default;

  std::vector<std::size_t> action_counts_;
  std::vector<double> table_;
  UtilityFn fn_;
};

// Potential values indexed by Game::encode.
using PotentialTable = std::vector<double>;

struct PotentialViolation {
  std::size_t player = 0;
  std::size_t from_action = 0;
  std::size_t to_action = 0;
  JointAction context;  // full profile; the player's own entry is from_action
};

struct PotentialCertificate {
  PotentialTable potential;
  double max_violation = 0.0;
  std::optional<PotentialViolation> violation;  // set when max_violation > tol

  bool holds(double tol) const { return max_violation <= tol; }
};

PotentialCertificate verify_potential(const Game& game, const PotentialTable& phi, double tol);

// Recovers a potential anchored at the all-first-actions profile by summing
// unilateral utility differences along coordinate paths. Empty when the game
// has no exact potential within tol.
std::optional<PotentialTable> construct_potential(const Game& game, double tol);

// All maximisers of u^i(., context^{-i}); ties grouped with relative tolerance 1e-12.
std::vector<std::size_t> best_response_set(const Game& game, std::size_t player,
                                           std::span<const std::size_t> context);

bool is_pure_nash(const Game& game, std::span<const std::size_t> profile);

// Product-measure expectation of u^i under one mixed strategy per player.
double expected_utility(const Game& game, std::size_t player, std::span<const MixedStrategy> profile);

// x_a proportional to exp(score_a / temperature), evaluated with the maximum
// score subtracted so that no finite input overflows.
MixedStrategy logit_map(std::span<const double> scores, double temperature);

// Strict unilateral improvements, lowest player first and then lowest action,
// until no player can improve. The returned path includes the start profile.
// Throws ConvergenceError when more than max_steps deviations are needed.
std::vector<JointAction> improvement_path(const Game& game, JointAction start, std::size_t max_steps);

// True when a > b beyond the relative tie tolerance used for best responses.
bool strictly_greater(double a, double b);

}  // namespace gamelearn
