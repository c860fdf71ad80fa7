#include "gamelearn/qlearning.hpp"

#include <algorithm>
#include <cmath>

#include "gamelearn/error.hpp"

namespace gamelearn {

void SoqlParams::validate() const {
  if (!(mu > 0.0 && mu < 1.0)) throw InvalidArgument("aggregation step mu must lie in (0, 1)");
  if (!(theta > 0.0 && theta < mu)) throw InvalidArgument("mixing step theta must lie in (0, mu)");
  if (!(xi > 0.0 && xi < 1.0)) throw InvalidArgument("perturbation magnitude xi must lie in (0, 1)");
  if (!(zeta > 0.0 && zeta < 1.0)) throw InvalidArgument("perturbation threshold zeta must lie in (0, 1)");
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
}

QState QState::initial(const std::vector<std::size_t>& action_counts) {
  QState s;
  for (std::size_t n : action_counts) {
    s.P.emplace_back(n, 0.0);
    s.Q.emplace_back(n, 0.0);
    s.X.push_back(MixedStrategy::uniform(n));
  }
  return s;
}

void standard_q_update(QState& state, std::size_t player, std::size_t played, double payoff, double step) {
  if (!(step > 0.0 && step <= 1.0)) throw InvalidArgument("Q step must lie in (0, 1]");
  double& q = state.Q.at(player).at(played);
  q += step * (payoff - q);
}

MixedStrategy boltzmann_selection(const QState& state, std::size_t player, double temperature) {
  return logit_map(state.Q.at(player), temperature);
}

void soql_update(QState& state, std::size_t player, std::size_t played, double payoff, double step) {
  if (!(step >= 0.0 && step <= 1.0)) throw InvalidArgument("aggregation step must lie in [0, 1]");
  double& p = state.P.at(player).at(played);
  double& q = state.Q.at(player).at(played);
  const double p_old = p;
  p += step * (payoff - p);
  q += step * (p_old - q);
}

std::vector<std::size_t> best_q_actions(const QState& state, std::size_t player) {
  const auto& row = state.Q.at(player);
  const double top = *std::max_element(row.begin(), row.end());
  std::vector<std::size_t> best;
  for (std::size_t a = 0; a < row.size(); ++a) {
    if (!strictly_greater(top, row[a])) best.push_back(a);
  }
  return best;
}

std::size_t greedy_strategy_update(QState& state, std::size_t player, double theta, Rng& rng) {
  if (!(theta > 0.0 && theta <= 1.0)) throw InvalidArgument("mixing step theta must lie in (0, 1]");
  const auto best = best_q_actions(state, player);
  const std::size_t b = best.size() == 1 ? best[0] : best[rng.uniform_index(best.size())];
  const auto old = state.X[player].weights();
  std::vector<double> w(old.begin(), old.end());
  double total = 0.0;
  for (std::size_t a = 0; a < w.size(); ++a) {
    w[a] = (1.0 - theta) * w[a] + (a == b ? theta : 0.0);
    total += w[a];
  }
  // Keep the simplex exact against drift over long runs.
  for (double& x : w) x /= total;
  state.X[player] = MixedStrategy(std::move(w));
  return b;
}

double closed_form_P(double P0, double u, double mu, std::size_t m) {
  const double a = std::pow(1.0 - mu, static_cast<double>(m));
  return a * P0 + (1.0 - a) * u;
}

double closed_form_Q(double Qn, double Qn1, double u, double mu, std::size_t m) {
  if (m == 0) throw InvalidArgument("closed-form Q needs m >= 1");
  const double md = static_cast<double>(m);
  const double am = std::pow(1.0 - mu, md);
  const double am1 = std::pow(1.0 - mu, md - 1.0);
  return md * am1 * Qn1 - (md - 1.0) * am * Qn + ((md - 1.0) * am - md * am1 + 1.0) * u;
}

double closed_form_X(double X0, bool is_target, double theta, std::size_t m) {
  const double a = std::pow(1.0 - theta, static_cast<double>(m));
  return a * X0 + (is_target ? 1.0 - a : 0.0);
}

double perturbation_weight(double max_norm, double xi, double zeta) {
  return xi * std::max(0.0, (max_norm - zeta) / (1.0 - zeta));
}

MixedStrategy perturb_strategy(const MixedStrategy& X, double xi, double zeta, bool zone_active) {
  if (!zone_active) return X;
  const double rho = perturbation_weight(X.max_norm(), xi, zeta);
  if (rho == 0.0) return X;
  const double share = rho / static_cast<double>(X.size());
  std::vector<double> w(X.size());
  for (std::size_t a = 0; a < w.size(); ++a) w[a] = (1.0 - rho) * X[a] + share;
  return MixedStrategy(std::move(w));
}

double adaptive_step(const MixedStrategy& perturbed, std::size_t action) { return 1.0 - perturbed[action]; }

std::size_t sample_restricted(std::span<const double> weights, std::span<const std::size_t> allowed, Rng& rng) {
  if (allowed.empty()) throw InvalidArgument("no allowed actions to sample from");
  double mass = 0.0;
  for (std::size_t a : allowed) mass += weights[a];
  if (!(mass > 0.0)) return allowed[rng.uniform_index(allowed.size())];
  const double u = rng.uniform() * mass;
  double cumulative = 0.0;
  for (std::size_t a : allowed) {
    cumulative += weights[a];
    if (u < cumulative) return a;
  }
  for (std::size_t k = allowed.size(); k-- > 0;) {
    if (weights[allowed[k]] > 0.0) return allowed[k];
  }
  return allowed.back();
}

double commitment_product(double theta, std::size_t m) {
  double log_sum = 0.0;
  double power = 1.0;
  for (std::size_t c = 1; c <= m; ++c) {
    power *= 1.0 - theta;
    log_sum += std::log1p(-power);
  }
  return std::exp(log_sum);
}

QStepOutcome soql_episode_step(const Game& game, QState& state, JointAction& current, const SoqlParams& params,
                               const ConstrainedActionMap& constraints, Rng& rng) {
  const std::size_t n = game.num_players();
  QStepOutcome out;
  bool all_in_zone = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (state.X[i].max_norm() < params.zeta) all_in_zone = false;
  }

  std::vector<MixedStrategy> perturbed(n);
  out.played.resize(n);
  // Players are visited from a random start so no index is favoured when
  // claiming the single exploration token.
  const std::size_t start = all_in_zone ? rng.uniform_index(n) : 0;
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t i = (start + k) % n;
    const auto& allowed = constraints.moves(i, current[i]);
    const bool may_explore = all_in_zone && out.perturbed_player >= n;
    if (may_explore && params.reachable_exploration) {
      const double rho = perturbation_weight(state.X[i].max_norm(), params.xi, params.zeta);
      if (rng.bernoulli(rho)) {
        out.perturbed_player = i;
        perturbed[i] = perturb_strategy(state.X[i], params.xi, params.zeta);
        out.played[i] = allowed[rng.uniform_index(allowed.size())];
        continue;
      }
    } else if (may_explore) {
      const auto tilde = perturb_strategy(state.X[i], params.xi, params.zeta);
      const std::size_t a = sample_restricted(tilde.weights(), allowed, rng);
      if (state.X[i][a] < state.X[i].max_norm()) {
        out.perturbed_player = i;
        perturbed[i] = tilde;
      }
      out.played[i] = a;
      continue;
    }
    out.played[i] = sample_restricted(state.X[i].weights(), allowed, rng);
  }
  out.payoffs.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.payoffs[i] = game.utility(i, out.played);
  for (std::size_t i = 0; i < n; ++i) {
    const double step = i == out.perturbed_player ? adaptive_step(perturbed[i], out.played[i]) : params.mu;
    soql_update(state, i, out.played[i], out.payoffs[i], step);
    greedy_strategy_update(state, i, params.theta, rng);
  }
  current = out.played;
  ++state.iteration;
  return out;
}

QStepOutcome ql_episode_step(const Game& game, QState& state, JointAction& current, const SoqlParams& params,
                             const ConstrainedActionMap& constraints, Rng& rng) {
  const std::size_t n = game.num_players();
  QStepOutcome out;
  out.played.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& allowed = constraints.moves(i, current[i]);
    std::vector<double> scores(allowed.size());
    for (std::size_t k = 0; k < allowed.size(); ++k) scores[k] = state.Q[i][allowed[k]];
    out.played[i] = allowed[logit_map(scores, params.temperature).sample(rng)];
  }
  out.payoffs.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.payoffs[i] = game.utility(i, out.played);
  for (std::size_t i = 0; i < n; ++i) standard_q_update(state, i, out.played[i], out.payoffs[i], params.mu);
  current = out.played;
  ++state.iteration;
  return out;
}

}  // namespace gamelearn
