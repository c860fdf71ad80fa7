#include "gamelearn/stability.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>

#include "gamelearn/error.hpp"

namespace gamelearn {

namespace {

constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

// log(1 + e^x) without overflow
double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

void check_epsilon(double epsilon) {
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw InvalidArgument("epsilon must lie in (0, 1)");
}

void check_wake(const Game& game, std::span<const double> wake) {
  if (wake.size() != game.num_players()) throw InvalidArgument("need one wake probability per player");
  for (double w : wake) {
    if (!(w >= 0.0 && w <= 1.0)) throw InvalidArgument("wake probability outside [0, 1]");
  }
}

// Calls fn(target) for every joint action reachable from source in one step.
void for_each_reachable(const ConstrainedActionMap& constraints, const JointAction& source,
                        const std::function<void(const JointAction&)>& fn) {
  JointAction target = source;
  const std::size_t n = source.size();
  std::function<void(std::size_t)> rec = [&](std::size_t i) {
    if (i == n) {
      fn(target);
      return;
    }
    for (std::size_t a : constraints.moves(i, source[i])) {
      target[i] = a;
      rec(i + 1);
    }
    target[i] = source[i];
  };
  rec(0);
}

std::string describe(const Game& game, std::span<const std::size_t> joint) { return game.format(joint); }

}  // namespace

std::vector<std::size_t> deviating_players(const ConstrainedActionMap& constraints, std::span<const std::size_t> source,
                                           std::span<const std::size_t> target) {
  if (source.size() != target.size() || source.size() != constraints.num_players()) {
    throw InvalidArgument("source and target must have one action per player");
  }
  std::vector<std::size_t> s;
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (source[i] == target[i]) continue;
    if (!constraints.allows(i, source[i], target[i])) {
      std::ostringstream msg;
      msg << "player " << i << " cannot move from action " << source[i] << " to " << target[i];
      throw InfeasibleTransition(msg.str());
    }
    s.push_back(i);
  }
  return s;
}

TransitionResistance resistance(const Game& game, const ConstrainedActionMap& constraints,
                                std::span<const std::size_t> source, std::span<const std::size_t> target) {
  TransitionResistance r;
  r.source.assign(source.begin(), source.end());
  r.target.assign(target.begin(), target.end());
  r.deviators = deviating_players(constraints, source, target);
  for (std::size_t i : r.deviators) {
    const double u1 = game.utility(i, source);
    const double u2 = game.utility(i, target);
    r.resistance += std::max(u1, u2) - u2;
  }
  return r;
}

double log_transition_probability(const Game& game, const ConstrainedActionMap& constraints,
                                  std::span<const double> wake, std::span<const std::size_t> source,
                                  std::span<const std::size_t> target, double epsilon) {
  check_epsilon(epsilon);
  check_wake(game, wake);
  const auto deviators = deviating_players(constraints, source, target);
  const double log_eps = std::log(epsilon);
  double logp = 0.0;
  std::size_t next = 0;
  for (std::size_t i = 0; i < game.num_players(); ++i) {
    if (next < deviators.size() && deviators[next] == i) {
      ++next;
      const double size = static_cast<double>(constraints.moves(i, source[i]).size());
      const double u1 = game.utility(i, source);
      const double u2 = game.utility(i, target);
      // eps^-u2 / (eps^-u1 + eps^-u2) = 1 / (1 + eps^(u2 - u1))
      logp += std::log(wake[i]) - std::log(size) - softplus((u2 - u1) * log_eps);
    } else {
      logp += std::log1p(-wake[i]);
    }
  }
  return logp;
}

double transition_probability(const Game& game, const ConstrainedActionMap& constraints, std::span<const double> wake,
                              std::span<const std::size_t> source, std::span<const std::size_t> target,
                              double epsilon) {
  return std::exp(log_transition_probability(game, constraints, wake, source, target, epsilon));
}

double scaled_transition_probability(const Game& game, const ConstrainedActionMap& constraints,
                                     std::span<const double> wake, std::span<const std::size_t> source,
                                     std::span<const std::size_t> target, double epsilon) {
  const double logp = log_transition_probability(game, constraints, wake, source, target, epsilon);
  const double r = resistance(game, constraints, source, target).resistance;
  return std::exp(logp - r * std::log(epsilon));
}

// ---------------------------------------------------------------------------
// Kernel

double PerturbedChain::probability(std::size_t from, std::size_t to) const {
  for (const auto& e : rows.at(from)) {
    if (e.target == to) return e.probability;
  }
  return 0.0;
}

double PerturbedChain::max_row_error() const {
  double worst = 0.0;
  for (const auto& row : rows) {
    double s = 0.0;
    for (const auto& e : row) s += e.probability;
    worst = std::max(worst, std::abs(s - 1.0));
  }
  return worst;
}

bool is_separable(const Game& game, double tol) {
  try {
    require_separable(game, tol);
  } catch (const PreconditionFailed&) {
    return false;
  }
  return true;
}

void require_separable(const Game& game, double tol) {
  const std::size_t count = game.joint_count();
  for (std::size_t index = 0; index < count; ++index) {
    const JointAction joint = game.decode(index);
    for (std::size_t i = 0; i < game.num_players(); ++i) {
      JointAction ref(joint.size(), 0);
      ref[i] = joint[i];
      const double a = game.utility(i, joint);
      const double b = game.utility(i, ref);
      if (std::abs(a - b) > tol * std::max({1.0, std::abs(a), std::abs(b)})) {
        std::ostringstream msg;
        msg << "game is not separable: player " << i << " earns " << a << " at " << describe(game, joint)
            << " but " << b << " at " << describe(game, ref) << " with its own action unchanged";
        throw PreconditionFailed(msg.str());
      }
    }
  }
}

PerturbedChain build_chain(const Game& game, const ConstrainedActionMap& constraints, std::span<const double> wake,
                           double epsilon, const ChainOptions& options) {
  check_epsilon(epsilon);
  check_wake(game, wake);
  constraints.check_shape(game);
  const std::size_t count = game.joint_count();
  if (count > options.max_states) {
    std::ostringstream msg;
    msg << "joint action space has " << count << " states, cap is " << options.max_states;
    throw ScaleError(msg.str());
  }
  const double temperature = temperature_from_epsilon(epsilon);
  const std::size_t n = game.num_players();
  const bool separable = is_separable(game);

  PerturbedChain chain;
  chain.epsilon = epsilon;
  chain.rows.resize(count);
  std::vector<double> scratch(count, 0.0);
  std::vector<std::size_t> touched;

  auto add = [&](const JointAction& target, double p) {
    if (p == 0.0) return;
    const std::size_t t = game.encode(target);
    if (scratch[t] == 0.0) touched.push_back(t);
    scratch[t] += p;
  };

  for (std::size_t s = 0; s < count; ++s) {
    const JointAction source = game.decode(s);
    touched.clear();

    if (separable) {
      // Each player's next action depends only on its own current action.
      std::vector<std::vector<std::pair<std::size_t, double>>> marginal(n);
      JointAction probe = source;
      for (std::size_t i = 0; i < n; ++i) {
        const auto& options_i = constraints.moves(i, source[i]);
        const double per_trial = wake[i] / static_cast<double>(options_i.size());
        const double u_now = game.utility(i, source);
        double stay = 1.0 - wake[i];
        for (std::size_t t : options_i) {
          if (t == source[i]) {
            stay += per_trial;
            continue;
          }
          probe[i] = t;
          const double accept = switch_probability(game.utility(i, probe) - u_now, temperature);
          marginal[i].emplace_back(t, per_trial * accept);
          stay += per_trial * (1.0 - accept);
        }
        probe[i] = source[i];
        marginal[i].emplace_back(source[i], stay);
      }
      JointAction target = source;
      std::function<void(std::size_t, double)> rec = [&](std::size_t i, double p) {
        if (i == n) {
          add(target, p);
          return;
        }
        for (const auto& [a, q] : marginal[i]) {
          target[i] = a;
          rec(i + 1, p * q);
        }
        target[i] = source[i];
      };
      rec(0, 1.0);
    } else {
      // Enumerate wake/trial proposals; a player that sleeps or proposes its
      // own action leaves its coordinate unchanged.
      JointAction proposal = source;
      std::vector<std::size_t> movers;
      std::vector<double> accept;
      JointAction target = source;
      std::function<void(std::size_t, double)> outcomes = [&](std::size_t k, double p) {
        if (k == movers.size()) {
          add(target, p);
          return;
        }
        const std::size_t i = movers[k];
        target[i] = proposal[i];
        outcomes(k + 1, p * accept[k]);
        target[i] = source[i];
        outcomes(k + 1, p * (1.0 - accept[k]));
      };
      std::function<void(std::size_t, double)> propose = [&](std::size_t i, double p) {
        if (p == 0.0) return;
        if (i == n) {
          accept.assign(movers.size(), 0.0);
          for (std::size_t k = 0; k < movers.size(); ++k) {
            const std::size_t j = movers[k];
            accept[k] = switch_probability(game.utility(j, proposal) - game.utility(j, source), temperature);
          }
          outcomes(0, p);
          return;
        }
        const auto& options_i = constraints.moves(i, source[i]);
        const double per_trial = wake[i] / static_cast<double>(options_i.size());
        double stay = 1.0 - wake[i];
        for (std::size_t t : options_i) {
          if (t == source[i]) stay += per_trial;
        }
        propose(i + 1, p * stay);
        for (std::size_t t : options_i) {
          if (t == source[i]) continue;
          proposal[i] = t;
          movers.push_back(i);
          propose(i + 1, p * per_trial);
          movers.pop_back();
          proposal[i] = source[i];
        }
      };
      propose(0, 1.0);
    }

    std::sort(touched.begin(), touched.end());
    auto& row = chain.rows[s];
    row.reserve(touched.size());
    for (std::size_t t : touched) {
      row.push_back({t, scratch[t]});
      scratch[t] = 0.0;
    }
  }
  return chain;
}

// ---------------------------------------------------------------------------
// Stationary distributions

std::vector<double> stationary_distribution_dense(const std::vector<std::vector<double>>& kernel) {
  const std::size_t n = kernel.size();
  if (n == 0) throw InvalidArgument("empty kernel");
  for (const auto& row : kernel) {
    if (row.size() != n) throw InvalidArgument("kernel must be square");
  }
  // Grassmann-Taksar-Heyman state reduction; subtraction-free, so it keeps
  // full relative accuracy even for nearly decomposable chains.
  std::vector<double> p(n * n);
  for (std::size_t i = 0; i < n; ++i) std::copy(kernel[i].begin(), kernel[i].end(), p.begin() + i * n);
  auto at = [&](std::size_t i, std::size_t j) -> double& { return p[i * n + j]; };
  for (std::size_t k = n; k-- > 1;) {
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) s += at(k, j);
    if (!(s > 0.0)) throw PreconditionFailed("chain is reducible: a state has no path to lower-indexed states");
    for (std::size_t i = 0; i < k; ++i) at(i, k) /= s;
    for (std::size_t i = 0; i < k; ++i) {
      const double f = at(i, k);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j < k; ++j) at(i, j) += f * at(k, j);
    }
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  for (std::size_t j = 1; j < n; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < j; ++i) s += pi[i] * at(i, j);
    pi[j] = s;
  }
  double total = 0.0;
  for (double x : pi) total += x;
  for (double& x : pi) x /= total;
  return pi;
}

std::vector<double> stationary_distribution(const PerturbedChain& chain, const StationaryOptions& options) {
  const std::size_t n = chain.size();
  if (n == 0) throw InvalidArgument("empty chain");
  if (n <= options.dense_limit) {
    std::vector<std::vector<double>> dense(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (const auto& e : chain.rows[i]) dense[i][e.target] += e.probability;
    }
    return stationary_distribution_dense(dense);
  }
  std::vector<double> pi(n, 1.0 / static_cast<double>(n));
  std::vector<double> next(n);
  for (std::size_t it = 0; it < options.max_iterations; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double m = pi[i];
      if (m == 0.0) continue;
      for (const auto& e : chain.rows[i]) next[e.target] += m * e.probability;
    }
    double total = 0.0;
    for (double x : next) total += x;
    double residual = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      next[i] /= total;
      residual += std::abs(next[i] - pi[i]);
    }
    pi.swap(next);
    if (residual <= options.tol) return pi;
  }
  throw ConvergenceError("power iteration did not reach the stationary tolerance");
}

StableSetReport stochastically_stable_states(const Game& game, const ConstrainedActionMap& constraints,
                                             std::span<const double> wake, std::span<const double> epsilons,
                                             double mass_threshold, const StationaryOptions& options) {
  if (epsilons.empty()) throw InvalidArgument("epsilon schedule is empty");
  for (std::size_t k = 0; k < epsilons.size(); ++k) {
    check_epsilon(epsilons[k]);
    if (k > 0 && !(epsilons[k] < epsilons[k - 1])) throw InvalidArgument("epsilon schedule must be strictly decreasing");
  }
  StableSetReport report;
  report.epsilons.assign(epsilons.begin(), epsilons.end());
  for (double eps : epsilons) {
    report.distributions.push_back(stationary_distribution(build_chain(game, constraints, wake, eps), options));
  }
  const auto& last = report.distributions.back();
  for (std::size_t s = 0; s < last.size(); ++s) {
    if (last[s] < mass_threshold) continue;
    bool rising = true;
    for (std::size_t k = 1; k < report.distributions.size(); ++k) {
      if (report.distributions[k][s] < report.distributions[k - 1][s] - 1e-12) rising = false;
    }
    if (rising) report.stable.push_back(s);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Resistance identities and trees

ResistanceIdentityReport verify_resistance_identity(const Game& game, const ConstrainedActionMap& constraints, double tol) {
  constraints.check_shape(game);
  require_separable(game);
  const auto phi = construct_potential(game, 1e-9);
  if (!phi) throw PreconditionFailed("game has no exact potential");
  ResistanceIdentityReport report;
  const std::size_t count = game.joint_count();
  for (std::size_t s = 0; s < count; ++s) {
    const JointAction source = game.decode(s);
    for_each_reachable(constraints, source, [&](const JointAction& target) {
      bool reversible = true;
      for (std::size_t i = 0; i < source.size(); ++i) {
        if (!constraints.allows(i, target[i], source[i])) reversible = false;
      }
      if (!reversible) return;
      const std::size_t t = game.encode(target);
      const double forward = resistance(game, constraints, source, target).resistance;
      const double backward = resistance(game, constraints, target, source).resistance;
      const double residual = std::abs((forward - backward) - ((*phi)[s] - (*phi)[t]));
      ++report.transitions_checked;
      report.max_residual = std::max(report.max_residual, residual);
      if (residual > tol) report.violations.push_back({s, t, residual});
    });
  }
  return report;
}

std::vector<std::size_t> min_in_arborescence(std::size_t n, std::size_t root, const std::vector<WeightedEdge>& edges) {
  if (root >= n) throw InvalidArgument("root out of range");
  // Reverse every edge and solve the usual out-arborescence problem, in which
  // each non-root node picks one incoming edge.
  struct E {
    std::size_t from, to;
    double w;
    std::size_t original;
  };
  std::vector<E> rev;
  rev.reserve(edges.size());
  for (std::size_t k = 0; k < edges.size(); ++k) {
    if (edges[k].from >= n || edges[k].to >= n) throw InvalidArgument("edge endpoint out of range");
    if (edges[k].from == edges[k].to) continue;
    rev.push_back({edges[k].to, edges[k].from, edges[k].weight, k});
  }

  // Chu-Liu/Edmonds, contracting one cycle per level.
  std::function<std::vector<std::size_t>(std::size_t, std::size_t, const std::vector<E>&)> solve =
      [&](std::size_t nodes, std::size_t r, const std::vector<E>& es) -> std::vector<std::size_t> {
    std::vector<std::size_t> best(nodes, kNone);
    for (std::size_t k = 0; k < es.size(); ++k) {
      const auto& e = es[k];
      if (e.to == r || e.from == e.to) continue;
      if (best[e.to] == kNone || e.w < es[best[e.to]].w) best[e.to] = k;
    }
    for (std::size_t v = 0; v < nodes; ++v) {
      if (v != r && best[v] == kNone) throw PreconditionFailed("some state cannot reach the root");
    }
    std::vector<std::size_t> id(nodes, kNone), visit(nodes, kNone);
    std::size_t cycle_id = kNone;
    for (std::size_t v = 0; v < nodes && cycle_id == kNone; ++v) {
      std::size_t u = v;
      while (u != r && visit[u] != v) {
        visit[u] = v;
        u = es[best[u]].from;
      }
      if (u != r) {
        // u lies on a cycle; label it 0 and everything else after.
        cycle_id = 0;
        std::size_t w = u;
        do {
          id[w] = 0;
          w = es[best[w]].from;
        } while (w != u);
      }
    }
    if (cycle_id == kNone) return best;
    std::size_t next_id = 1;
    for (std::size_t v = 0; v < nodes; ++v) {
      if (id[v] == kNone) id[v] = next_id++;
    }
    std::vector<E> contracted;
    std::vector<std::size_t> origin;
    for (std::size_t k = 0; k < es.size(); ++k) {
      const auto& e = es[k];
      const std::size_t a = id[e.from], b = id[e.to];
      if (a == b) continue;
      const double w = (b == 0) ? e.w - es[best[e.to]].w : e.w;
      contracted.push_back({a, b, w, e.original});
      origin.push_back(k);
    }
    const auto sub = solve(next_id, id[r], contracted);
    std::vector<std::size_t> result = best;
    for (std::size_t c = 0; c < next_id; ++c) {
      if (c == id[r]) continue;
      const std::size_t k = origin[sub[c]];
      result[es[k].to] = k;
    }
    return result;
  };

  const auto chosen = solve(n, root, rev);
  std::vector<std::size_t> out(n, kNone);
  for (std::size_t v = 0; v < n; ++v) {
    if (v != root) out[v] = rev[chosen[v]].original;
  }
  return out;
}

ResistanceTree min_resistance_tree(const Game& game, const ConstrainedActionMap& constraints,
                                   std::span<const std::size_t> root, std::size_t max_states) {
  constraints.check_shape(game);
  const std::size_t count = game.joint_count();
  if (count > max_states) {
    std::ostringstream msg;
    msg << "resistance tree search is limited to " << max_states << " states, game has " << count;
    throw ScaleError(msg.str());
  }
  const std::size_t r = game.encode(root);
  std::vector<WeightedEdge> edges;
  for (std::size_t s = 0; s < count; ++s) {
    const JointAction source = game.decode(s);
    for_each_reachable(constraints, source, [&](const JointAction& target) {
      const std::size_t t = game.encode(target);
      if (t == s) return;
      edges.push_back({s, t, resistance(game, constraints, source, target).resistance});
    });
  }
  const auto chosen = min_in_arborescence(count, r, edges);
  ResistanceTree tree;
  tree.root = r;
  for (std::size_t v = 0; v < count; ++v) {
    if (v == r) continue;
    const auto& e = edges[chosen[v]];
    tree.edges.emplace_back(e.from, e.to);
    tree.total += e.weight;
  }
  return tree;
}

}  // namespace gamelearn
