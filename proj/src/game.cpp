#include "gamelearn/game.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "gamelearn/error.hpp"

namespace gamelearn {

namespace {

constexpr double kTieTolerance = 1e-12;

double tie_scale(double a, double b) { return kTieTolerance * std::max({1.0, std::abs(a), std::abs(b)}); }

}  // namespace

bool strictly_greater(double a, double b) { return a - b > tie_scale(a, b); }

// ---------------------------------------------------------------------------
// MixedStrategy

MixedStrategy::MixedStrategy(std::vector<double> weights) : weights_(std::move(weights)) {
  if (weights_.empty()) throw InvalidArgument("mixed strategy over an empty action set");
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("mixed strategy weight is negative or not finite");
    total += w;
  }
  if (std::abs(total - 1.0) > kTolerance) {
    std::ostringstream msg;
    msg << "mixed strategy weights sum to " << total << ", expected 1";
    throw InvalidArgument(msg.str());
  }
}

MixedStrategy MixedStrategy::uniform(std::size_t num_actions) {
  if (num_actions == 0) throw InvalidArgument("mixed strategy over an empty action set");
  return MixedStrategy(std::vector<double>(num_actions, 1.0 / static_cast<double>(num_actions)));
}

MixedStrategy MixedStrategy::pure(std::size_t num_actions, std::size_t action) {
  if (action >= num_actions) throw InvalidArgument("pure strategy action out of range");
  std::vector<double> w(num_actions, 0.0);
  w[action] = 1.0;
  return MixedStrategy(std::move(w));
}

double MixedStrategy::max_norm() const { return *std::max_element(weights_.begin(), weights_.end()); }

std::size_t MixedStrategy::sample(Rng& rng) const {
  const double u = rng.uniform();
  double cumulative = 0.0;
  for (std::size_t a = 0; a < weights_.size(); ++a) {
    cumulative += weights_[a];
    if (u < cumulative) return a;
  }
  // Rounding left a sliver above the last cumulative sum; give it to the last
  // action that carries positive mass.
  for (std::size_t a = weights_.size(); a-- > 0;) {
    if (weights_[a] > 0.0) return a;
  }
  return weights_.size() - 1;
}

// ---------------------------------------------------------------------------
// Game

Game Game::from_table(std::vector<std::size_t> action_counts, std::vector<double> payoffs) {
  Game g;
  g.action_counts_ = std::move(action_counts);
  if (g.action_counts_.empty()) throw InvalidArgument("game needs at least one player");
  for (std::size_t n : g.action_counts_) {
    if (n == 0) throw InvalidArgument("every action set must be non-empty");
  }
  const std::size_t expected = g.joint_count() * g.num_players();
  if (payoffs.size() != expected) {
    std::ostringstream msg;
    msg << "utility table has " << payoffs.size() << " entries, expected " << expected;
    throw InvalidArgument(msg.str());
  }
  for (double u : payoffs) {
    if (!std::isfinite(u)) throw InvalidArgument("utility table contains a non-finite payoff");
  }
  g.table_ = std::move(payoffs);
  return g;
}

Game Game::from_function(std::vector<std::size_t> action_counts, UtilityFn utility) {
  Game g;
  g.action_counts_ = std::move(action_counts);
  if (g.action_counts_.empty()) throw InvalidArgument("game needs at least one player");
  for (std::size_t n : g.action_counts_) {
    if (n == 0) throw InvalidArgument("every action set must be non-empty");
  }
  if (!utility) throw InvalidArgument("utility callback is empty");
  g.fn_ = std::move(utility);
  return g;
}

double Game::utility(std::size_t player, std::span<const std::size_t> joint) const {
  if (!table_.empty()) return table_[encode(joint) * num_players() + player];
  return fn_(player, joint);
}

std::size_t Game::joint_count() const {
  std::size_t count = 1;
  for (std::size_t n : action_counts_) {
    if (count > std::numeric_limits<std::size_t>::max() / n) throw ScaleError("joint action space overflows");
    count *= n;
  }
  return count;
}

std::size_t Game::encode(std::span<const std::size_t> joint) const {
  if (joint.size() != num_players()) throw InvalidArgument("joint action has the wrong number of players");
  std::size_t index = 0;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] >= action_counts_[i]) throw InvalidArgument("joint action index out of range");
    index = index * action_counts_[i] + joint[i];
  }
  return index;
}

JointAction Game::decode(std::size_t index) const {
  JointAction joint(num_players());
  for (std::size_t i = num_players(); i-- > 0;) {
    joint[i] = index % action_counts_[i];
    index /= action_counts_[i];
  }
  return joint;
}

bool Game::is_valid(std::span<const std::size_t> joint) const {
  if (joint.size() != num_players()) return false;
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (joint[i] >= action_counts_[i]) return false;
  }
  return true;
}

std::string Game::format(std::span<const std::size_t> joint) const {
  std::ostringstream out;
  out << '(';
  for (std::size_t i = 0; i < joint.size(); ++i) {
    if (i) out << ',';
    if (i < action_labels.size() && joint[i] < action_labels[i].size()) {
      out << action_labels[i][joint[i]];
    } else {
      out << joint[i];
    }
  }
  out << ')';
  return out.str();
}

// ---------------------------------------------------------------------------
// Potential structure

PotentialCertificate verify_potential(const Game& game, const PotentialTable& phi, double tol) {
  const std::size_t count = game.joint_count();
  if (phi.size() != count) {
    std::ostringstream msg;
    msg << "potential table has " << phi.size() << " entries but the game has " << count << " joint actions";
    throw InvalidArgument(msg.str());
  }
  PotentialCertificate cert;
  cert.potential = phi;
  PotentialViolation worst;
  const std::size_t n = game.num_players();
  for (std::size_t index = 0; index < count; ++index) {
    JointAction joint = game.decode(index);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t from = joint[i];
      const double u_from = game.utility(i, joint);
      // Each unordered pair is visited once: only deviations to higher indices.
      for (std::size_t to = from + 1; to < game.num_actions(i); ++to) {
        joint[i] = to;
        const double du = game.utility(i, joint) - u_from;
        const double dphi = phi[game.encode(joint)] - phi[index];
        const double gap = std::abs(dphi - du);
        if (gap > cert.max_violation) {
          cert.max_violation = gap;
          worst = {i, from, to, joint};
          worst.context[i] = from;
        }
      }
      joint[i] = from;
    }
  }
  if (cert.max_violation > tol) cert.violation = worst;
  return cert;
}

std::optional<PotentialTable> construct_potential(const Game& game, double tol) {
  const std::size_t count = game.joint_count();
  PotentialTable phi(count, 0.0);
  // Decoded order guarantees that resetting the last non-zero coordinate yields
  // a smaller index, so its potential is already known.
  for (std::size_t index = 1; index < count; ++index) {
    JointAction joint = game.decode(index);
    std::size_t k = joint.size();
    while (k-- > 0 && joint[k] == 0) {
    }
    const double u_here = game.utility(k, joint);
    joint[k] = 0;
    const double u_anchor = game.utility(k, joint);
    phi[index] = phi[game.encode(joint)] + (u_here - u_anchor);
  }
  if (!verify_potential(game, phi, tol).holds(tol)) return std::nullopt;
  return phi;
}

// ---------------------------------------------------------------------------
// Best responses and equilibria

std::vector<std::size_t> best_response_set(const Game& game, std::size_t player,
                                           std::span<const std::size_t> context) {
  JointAction joint(context.begin(), context.end());
  std::vector<double> values(game.num_actions(player));
  for (std::size_t a = 0; a < values.size(); ++a) {
    joint[player] = a;
    values[a] = game.utility(player, joint);
  }
  const double best = *std::max_element(values.begin(), values.end());
  std::vector<std::size_t> result;
  for (std::size_t a = 0; a < values.size(); ++a) {
    if (!strictly_greater(best, values[a])) result.push_back(a);
  }
  return result;
}

bool is_pure_nash(const Game& game, std::span<const std::size_t> profile) {
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    const auto br = best_response_set(game, i, profile);
    if (std::find(br.begin(), br.end(), profile[i]) == br.end()) return false;
  }
  return true;
}

double expected_utility(const Game& game, std::size_t player, std::span<const MixedStrategy> profile) {
  const std::size_t n = game.num_players();
  if (profile.size() != n) throw InvalidArgument("expected one mixed strategy per player");
  for (std::size_t i = 0; i < n; ++i) {
    if (profile[i].size() != game.num_actions(i)) throw InvalidArgument("mixed strategy size does not match action set");
  }
  JointAction joint(n, 0);
  // Depth-first over players so zero-probability branches are skipped whole.
  std::function<double(std::size_t, double)> expand = [&](std::size_t i, double weight) -> double {
    if (i == n) return weight * game.utility(player, joint);
    double total = 0.0;
    for (std::size_t a = 0; a < profile[i].size(); ++a) {
      const double p = profile[i][a];
      if (p == 0.0) continue;
      joint[i] = a;
      total += expand(i + 1, weight * p);
    }
    return total;
  };
  return expand(0, 1.0);
}

MixedStrategy logit_map(std::span<const double> scores, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("logit temperature must be positive");
  if (scores.empty()) throw InvalidArgument("logit map over an empty action set");
  const double top = *std::max_element(scores.begin(), scores.end());
  std::vector<double> w(scores.size());
  double total = 0.0;
  for (std::size_t a = 0; a < scores.size(); ++a) {
    w[a] = std::exp((scores[a] - top) / temperature);
    total += w[a];
  }
  for (double& x : w) x /= total;
  return MixedStrategy(std::move(w));
}

std::vector<JointAction> improvement_path(const Game& game, JointAction start, std::size_t max_steps) {
  if (!game.is_valid(start)) throw InvalidArgument("improvement path start is not a valid profile");
  std::vector<JointAction> path{start};
  JointAction current = std::move(start);
  for (std::size_t step = 0;; ++step) {
    bool moved = false;
    for (std::size_t i = 0; i < game.num_players() && !moved; ++i) {
      const std::size_t own = current[i];
      const double u_now = game.utility(i, current);
      for (std::size_t a = 0; a < game.num_actions(i); ++a) {
        if (a == own) continue;
        current[i] = a;
        if (strictly_greater(game.utility(i, current), u_now)) {
          moved = true;
          break;
        }
      }
      if (!moved) current[i] = own;
    }
    if (!moved) return path;
    if (step >= max_steps) throw ConvergenceError("improvement path exceeded the step bound");
    path.push_back(current);
  }
}

}  // namespace gamelearn
