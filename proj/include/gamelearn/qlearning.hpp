#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gamelearn/game.hpp"
#include "gamelearn/loglinear.hpp"
#include "gamelearn/rng.hpp"

namespace gamelearn {

struct SoqlParams {
  double mu = 0.97;     // aggregation step
  double theta = 0.5;   // strategy mixing step, must be below mu
  double xi = 0.01;     // perturbation magnitude
  double zeta = 0.9999; // max-norm at which perturbation starts
  double temperature = 0.1;  // Boltzmann temperature for the first-order comparator
  // Token holder's uniform share goes to its reachable actions rather than to
  // the whole action set (where masking would leave almost nothing of it).
  bool reachable_exploration = true;

  void validate() const;
};

// Per-player tables. P is the first aggregate, Q the second (or the only one
// for first-order learning); X the mixed strategy.
struct QState {
  std::vector<std::vector<double>> P;
  std::vector<std::vector<double>> Q;
  std::vector<MixedStrategy> X;
  std::size_t iteration = 0;

  // P = Q = 0 and X uniform.
  static QState initial(const std::vector<std::size_t>& action_counts);
};

void standard_q_update(QState& state, std::size_t player, std::size_t played, double payoff, double step);

MixedStrategy boltzmann_selection(const QState& state, std::size_t player, double temperature);

// Second-order update of the played action only; Q moves toward the
// pre-update P.
void soql_update(QState& state, std::size_t player, std::size_t played, double payoff, double step);

// All actions maximising the player's Q row (relative tie tolerance 1e-12).
std::vector<std::size_t> best_q_actions(const QState& state, std::size_t player);

// X <- (1 - theta) X + theta e_b with b drawn uniformly from the maximisers of
// Q. Returns the chosen b.
std::size_t greedy_strategy_update(QState& state, std::size_t player, double theta, Rng& rng);

double closed_form_P(double P0, double u, double mu, std::size_t m);
// Qn is the value at step n, Qn1 at step n + 1; requires m >= 1.
double closed_form_Q(double Qn, double Qn1, double u, double mu, std::size_t m);
// Weight on one action after m greedy updates toward a fixed target.
double closed_form_X(double X0, bool is_target, double theta, std::size_t m);

// rho = xi * max(0, (max_norm - zeta) / (1 - zeta))
double perturbation_weight(double max_norm, double xi, double zeta);
// X~ = (1 - rho) X + rho / |A|. Returns X unchanged when zone_active is false.
MixedStrategy perturb_strategy(const MixedStrategy& X, double xi, double zeta, bool zone_active = true);

// Step for action j under the perturbed strategy: 1 - X~_j.
double adaptive_step(const MixedStrategy& perturbed, std::size_t action);

// Draw from X restricted to allowed (renormalised). Falls back to a uniform
// draw over allowed when X puts no mass there.
std::size_t sample_restricted(std::span<const double> weights, std::span<const std::size_t> allowed, Rng& rng);

// Product over c = 1..m of (1 - (1 - theta)^c).
double commitment_product(double theta, std::size_t m);

struct QStepOutcome {
  JointAction played;
  std::vector<double> payoffs;
  std::size_t perturbed_player = static_cast<std::size_t>(-1);  // token holder, if any
};

// One SOQL iteration for every player: masked draw, payoff, second-order
// update, greedy strategy mixing. Once every player is inside the zone each
// player may draw from its perturbed strategy, but only the first one whose
// draw is an exploration (off the committed action) holds the token that
// iteration; it updates with the adaptive step, everyone else uses mu. With
// reachable_exploration an exploration is a uniform draw over the reachable
// actions taken with probability rho.
QStepOutcome soql_episode_step(const Game& game, QState& state, JointAction& current, const SoqlParams& params,
                               const ConstrainedActionMap& constraints, Rng& rng);

// First-order comparator: Boltzmann draw over the reachable actions' Q
// values, then the standard update with step mu.
QStepOutcome ql_episode_step(const Game& game, QState& state, JointAction& current, const SoqlParams& params,
                             const ConstrainedActionMap& constraints, Rng& rng);

}  // namespace gamelearn
