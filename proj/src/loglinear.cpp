#include "gamelearn/loglinear.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "gamelearn/error.hpp"

namespace gamelearn {

ConstrainedActionMap::ConstrainedActionMap(std::vector<std::vector<std::vector<std::size_t>>> moves)
    : moves_(std::move(moves)) {
  for (std::size_t i = 0; i < moves_.size(); ++i) {
    const std::size_t n = moves_[i].size();
    for (auto& list : moves_[i]) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
      if (!list.empty() && list.back() >= n) throw InvalidArgument("constrained move points outside the action set");
    }
  }
}

ConstrainedActionMap ConstrainedActionMap::complete(const std::vector<std::size_t>& action_counts) {
  std::vector<std::vector<std::vector<std::size_t>>> moves(action_counts.size());
  for (std::size_t i = 0; i < action_counts.size(); ++i) {
    std::vector<std::size_t> all(action_counts[i]);
    for (std::size_t a = 0; a < all.size(); ++a) all[a] = a;
    moves[i].assign(action_counts[i], all);
  }
  return ConstrainedActionMap(std::move(moves));
}

bool ConstrainedActionMap::allows(std::size_t player, std::size_t from, std::size_t to) const {
  const auto& list = moves(player, from);
  return std::binary_search(list.begin(), list.end(), to);
}

void ConstrainedActionMap::check_shape(const Game& game) const {
  if (num_players() != game.num_players()) throw InvalidArgument("constraint map has the wrong number of players");
  for (std::size_t i = 0; i < num_players(); ++i) {
    if (num_actions(i) != game.num_actions(i)) {
      std::ostringstream msg;
      msg << "constraint map for player " << i << " covers " << num_actions(i) << " actions, game has "
          << game.num_actions(i);
      throw InvalidArgument(msg.str());
    }
  }
}

ConstraintReport validate_constraints(const ConstrainedActionMap& constraints) {
  ConstraintReport report;
  for (std::size_t i = 0; i < constraints.num_players(); ++i) {
    const std::size_t n = constraints.num_actions(i);
    for (std::size_t a = 0; a < n; ++a) {
      const auto& list = constraints.moves(i, a);
      if (list.empty()) report.non_empty = false;
      for (std::size_t b : list) {
        if (!constraints.allows(i, b, a) && report.symmetric) {
          report.symmetric = false;
          report.one_way = ConstraintReport::Edge{i, a, b};
        }
      }
    }
    // Strong connectivity: everything reachable from 0 along edges and along
    // reversed edges.
    for (int direction = 0; direction < 2 && n > 0; ++direction) {
      std::vector<std::vector<std::size_t>> adj(n);
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b : constraints.moves(i, a)) {
          if (direction == 0) adj[a].push_back(b);
          else adj[b].push_back(a);
        }
      }
      std::vector<char> seen(n, 0);
      std::vector<std::size_t> stack{0};
      seen[0] = 1;
      while (!stack.empty()) {
        const std::size_t a = stack.back();
        stack.pop_back();
        for (std::size_t b : adj[a]) {
          if (!seen[b]) {
            seen[b] = 1;
            stack.push_back(b);
          }
        }
      }
      for (std::size_t a = 0; a < n; ++a) {
        if (!seen[a] && report.connected) {
          report.connected = false;
          report.unreachable = std::make_pair(i, a);
        }
      }
    }
  }
  return report;
}

double RevisionPolicy::c() const { return std::log(a1) / k; }

void RevisionPolicy::validate() const {
  if (!(a1 > 0.0 && a1 <= 1.0)) throw InvalidArgument("revision anchor a1 must lie in (0, 1]");
  if (!(a2 > 0.0 && a2 < 1.0)) throw InvalidArgument("revision anchor a2 must lie in (0, 1)");
  if (!(a3 > 0.0 && a3 < 1.0)) throw InvalidArgument("revision anchor a3 must lie in (0, 1)");
  if (!(k > 0.0) || !std::isfinite(k)) throw InvalidArgument("revision drop rate k must be positive");
  if (!(p_min > 0.0 && p_min < 0.5)) throw InvalidArgument("revision floor p_min must lie in (0, 0.5)");
}

double revision_probability(const RevisionPolicy& policy, double F, double G) {
  if (!(F >= 0.0 && F <= 1.0)) throw InvalidArgument("normalised worth F must lie in [0, 1]");
  if (!(G >= 0.0 && G <= 1.0)) throw InvalidArgument("normalised gradient G must lie in [0, 1]");
  const double drop = std::exp(-policy.k * (F - policy.c()));
  const double rp = (policy.a2 - drop) * G + drop;
  return std::clamp(rp, policy.p_min, 1.0 - policy.p_min);
}

double LoglinearState::epsilon() const { return std::exp(-1.0 / temperature); }

double temperature_from_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
  return -1.0 / std::log(epsilon);
}

double switch_probability(double delta, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  const double x = delta / temperature;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

namespace {

void check_state(const Game& game, const LoglinearState& state) {
  if (!(state.temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  if (!game.is_valid(state.joint)) throw InvalidArgument("state holds an invalid joint action");
}

}  // namespace

StepOutcome lll_step(const Game& game, LoglinearState& state, Rng& rng) {
  check_state(game, state);
  StepOutcome out;
  const std::size_t i = rng.uniform_index(game.num_players());
  const std::size_t before = state.joint[i];
  std::vector<double> scores(game.num_actions(i));
  JointAction probe = state.joint;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    probe[i] = a;
    scores[a] = game.utility(i, probe);
  }
  const std::size_t chosen = logit_map(scores, state.temperature).sample(rng);
  state.joint[i] = chosen;
  ++state.iteration;
  out.awake = {i};
  out.trials = {chosen};
  out.adopted = {chosen != before};
  return out;
}

StepOutcome blll_step(const Game& game, LoglinearState& state, const ConstrainedActionMap& constraints, Rng& rng) {
  check_state(game, state);
  const std::size_t i = rng.uniform_index(game.num_players());
  const std::size_t awake[1] = {i};
  return psblll_step_with_awake(game, state, constraints, awake, rng);
}

StepOutcome psblll_step(const Game& game, LoglinearState& state, const ConstrainedActionMap& constraints,
                        std::span<const double> wake, Rng& rng) {
  check_state(game, state);
  if (wake.size() != game.num_players()) throw InvalidArgument("need one wake probability per player");
  std::vector<std::size_t> awake;
  for (std::size_t i = 0; i < wake.size(); ++i) {
    if (!(wake[i] >= 0.0 && wake[i] <= 1.0)) throw InvalidArgument("wake probability outside [0, 1]");
    if (rng.bernoulli(wake[i])) awake.push_back(i);
  }
  return psblll_step_with_awake(game, state, constraints, awake, rng);
}

StepOutcome psblll_step_with_awake(const Game& game, LoglinearState& state, const ConstrainedActionMap& constraints,
                                   std::span<const std::size_t> awake, Rng& rng) {
  check_state(game, state);
  StepOutcome out;
  out.awake.assign(awake.begin(), awake.end());
  if (awake.empty()) {
    ++state.iteration;
    return out;
  }
  JointAction trial_profile = state.joint;
  for (std::size_t i : awake) {
    if (i >= game.num_players()) throw InvalidArgument("awake player out of range");
    const auto& options = constraints.moves(i, state.joint[i]);
    const std::size_t t = options[rng.uniform_index(options.size())];
    out.trials.push_back(t);
    trial_profile[i] = t;
  }
  JointAction next = state.joint;
  for (std::size_t k = 0; k < awake.size(); ++k) {
    const std::size_t i = awake[k];
    const double delta = game.utility(i, trial_profile) - game.utility(i, state.joint);
    const bool adopt = rng.bernoulli(switch_probability(delta, state.temperature));
    out.adopted.push_back(adopt);
    if (adopt) next[i] = out.trials[k];
  }
  state.joint = std::move(next);
  ++state.iteration;
  return out;
}

}  // namespace gamelearn
