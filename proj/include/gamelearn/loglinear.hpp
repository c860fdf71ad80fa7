#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gamelearn/game.hpp"
#include "gamelearn/rng.hpp"

namespace gamelearn {

// Per-player map from the current action to the actions reachable next. Every
// list is sorted and contains the current action itself.
class ConstrainedActionMap {
 public:
  ConstrainedActionMap() = default;
  // moves[player][action] = reachable actions from action.
  explicit ConstrainedActionMap(std::vector<std::vector<std::vector<std::size_t>>> moves);

  // Every action reaches every action.
  static ConstrainedActionMap complete(const std::vector<std::size_t>& action_counts);

  std::size_t num_players() const { return moves_.size(); }
  std::size_t num_actions(std::size_t player) const { return moves_.at(player).size(); }
  const std::vector<std::size_t>& moves(std::size_t player, std::size_t action) const {
    return moves_.at(player).at(action);
  }
  bool allows(std::size_t player, std::size_t from, std::size_t to) const;

  // Throws InvalidArgument unless the map has one entry per action of game.
  void check_shape(const Game& game) const;

 private:
  std::vector<std::vector<std::vector<std::size_t>>> moves_;
};

struct ConstraintReport {
  bool connected = true;   // every player's move graph is strongly connected
  bool symmetric = true;   // b in moves(a) iff a in moves(b)
  bool non_empty = true;
  // First witnesses found, for diagnostics.
  std::optional<std::pair<std::size_t, std::size_t>> unreachable;  // (player, action not reached from 0)
  struct Edge {
    std::size_t player, from, to;
  };
  std::optional<Edge> one_way;
  bool ok() const { return connected && symmetric && non_empty; }
};

ConstraintReport validate_constraints(const ConstrainedActionMap& constraints);

// Wake-up probability as a function of normalised sensed worth F and
// normalised worth gradient G. a3 is carried for reference only; it does not
// enter the formula.
struct RevisionPolicy {
  double a1 = 1.0;
  double a2 = 0.5;
  double a3 = 0.1;
  double k = 4.0;
  double p_min = 1e-6;

  double c() const;
  void validate() const;
};

double revision_probability(const RevisionPolicy& policy, double F, double G);

struct LoglinearState {
  JointAction joint;
  double temperature = 0.1;
  std::size_t iteration = 0;

  // epsilon = exp(-1/temperature)
  double epsilon() const;
};

double temperature_from_epsilon(double epsilon);

// What happened during one step; used by the coverage harness to decide when
// to record observations.
struct StepOutcome {
  std::vector<std::size_t> awake;
  std::vector<std::size_t> trials;  // aligned with awake
  std::vector<bool> adopted;        // aligned with awake
};

// Probability that an awake player moves to its trial action when the trial
// profile pays delta = u(trial profile) - u(current) more.
double switch_probability(double delta, double temperature);

// One player chosen uniformly; its new action is drawn from the logit map over
// its whole action set.
StepOutcome lll_step(const Game& game, LoglinearState& state, Rng& rng);

// One player chosen uniformly draws a trial from its constrained set and keeps
// it with the binary logit probability.
StepOutcome blll_step(const Game& game, LoglinearState& state, const ConstrainedActionMap& constraints, Rng& rng);

// Every player wakes independently with wake[i]; awake players draw trials and
// each compares its utility at the all-awake-trials profile with its utility
// now.
StepOutcome psblll_step(const Game& game, LoglinearState& state, const ConstrainedActionMap& constraints,
                        std::span<const double> wake, Rng& rng);

// The same update with a caller-chosen awake set (sorted, distinct players).
StepOutcome psblll_step_with_awake(const Game& game, LoglinearState& state, const ConstrainedActionMap& constraints,
                                   std::span<const std::size_t> awake, Rng& rng);

}  // namespace gamelearn
