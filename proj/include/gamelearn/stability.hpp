#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gamelearn/game.hpp"
#include "gamelearn/loglinear.hpp"

namespace gamelearn {

struct TransitionResistance {
  JointAction source;
  JointAction target;
  std::vector<std::size_t> deviators;
  double resistance = 0.0;
};

// Players whose actions differ between source and target. Throws
// InfeasibleTransition when one of them cannot reach its target action.
std::vector<std::size_t> deviating_players(const ConstrainedActionMap& constraints, std::span<const std::size_t> source,
                                           std::span<const std::size_t> target);

TransitionResistance resistance(const Game& game, const ConstrainedActionMap& constraints,
                                std::span<const std::size_t> source, std::span<const std::size_t> target);

// Probability of the event "exactly the deviators wake, each draws its target
// action and each accepts it". wake[i] is player i's revision probability.
double transition_probability(const Game& game, const ConstrainedActionMap& constraints, std::span<const double> wake,
                              std::span<const std::size_t> source, std::span<const std::size_t> target,
                              double epsilon);
double log_transition_probability(const Game& game, const ConstrainedActionMap& constraints,
                                  std::span<const double> wake, std::span<const std::size_t> source,
                                  std::span<const std::size_t> target, double epsilon);
// transition_probability / epsilon^resistance, evaluated in log space.
double scaled_transition_probability(const Game& game, const ConstrainedActionMap& constraints,
                                     std::span<const double> wake, std::span<const std::size_t> source,
                                     std::span<const std::size_t> target, double epsilon);

// Sparse row-stochastic kernel over joint actions (indexed by Game::encode).
struct PerturbedChain {
  struct Entry {
    std::size_t target;
    double probability;
  };
  double epsilon = 0.0;
  std::vector<std::vector<Entry>> rows;

  std::size_t size() const { return rows.size(); }
  double probability(std::size_t from, std::size_t to) const;
  double max_row_error() const;
};

struct ChainOptions {
  std::size_t max_states = 20000;
};

// Exact one-step kernel of psblll_step with wake probabilities fixed per
// player and temperature -1/ln(epsilon). Sums over every wake and trial
// realisation, including players that wake and stay.
PerturbedChain build_chain(const Game& game, const ConstrainedActionMap& constraints, std::span<const double> wake,
                           double epsilon, const ChainOptions& options = {});

struct StationaryOptions {
  double tol = 1e-12;
  std::size_t dense_limit = 2000;
  std::size_t max_iterations = 5'000'000;
};

std::vector<double> stationary_distribution(const PerturbedChain& chain, const StationaryOptions& options = {});
// Same, for a dense row-major matrix.
std::vector<double> stationary_distribution_dense(const std::vector<std::vector<double>>& kernel);

struct StableSetReport {
  std::vector<double> epsilons;
  std::vector<std::vector<double>> distributions;  // one per epsilon
  std::vector<std::size_t> stable;                 // encoded joint actions
};

// Stable states: mass at the smallest epsilon at least mass_threshold and
// non-decreasing along the schedule. epsilons must be strictly decreasing.
StableSetReport stochastically_stable_states(const Game& game, const ConstrainedActionMap& constraints,
                                             std::span<const double> wake, std::span<const double> epsilons,
                                             double mass_threshold = 0.05,
                                             const StationaryOptions& options = {});

// Throws PreconditionFailed naming a witness when some player's utility
// depends on other players' actions.
void require_separable(const Game& game, double tol = 1e-12);
bool is_separable(const Game& game, double tol = 1e-12);

struct ResistanceIdentityReport {
  std::size_t transitions_checked = 0;
  double max_residual = 0.0;
  struct Violation {
    std::size_t source, target;
    double residual;
  };
  std::vector<Violation> violations;
};

// Checks forward-minus-backward resistance against the potential difference
// over every feasible transition pair. Requires a separable potential game.
ResistanceIdentityReport verify_resistance_identity(const Game& game, const ConstrainedActionMap& constraints, double tol = 1e-12);

struct ResistanceTree {
  std::size_t root = 0;
  // (child, parent) pairs: each non-root state points one step toward root.
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  double total = 0.0;
};

// Minimum-resistance spanning tree directed toward root over all feasible
// transitions. Limited to max_states states.
ResistanceTree min_resistance_tree(const Game& game, const ConstrainedActionMap& constraints,
                                   std::span<const std::size_t> root, std::size_t max_states = 12);

// Minimum in-arborescence of a weighted digraph on n nodes. Each returned
// entry is the edge index chosen as the outgoing edge of that node (root gets
// no entry; its slot holds SIZE_MAX). Throws PreconditionFailed if some node
// cannot reach root.
struct WeightedEdge {
  std::size_t from, to;
  double weight;
};
std::vector<std::size_t> min_in_arborescence(std::size_t n, std::size_t root, const std::vector<WeightedEdge>& edges);

}  // namespace gamelearn
