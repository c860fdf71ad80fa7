#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "gamelearn/game.hpp"
#include "gamelearn/loglinear.hpp"
#include "gamelearn/rng.hpp"

namespace testsupport {

using gamelearn::Game;
using gamelearn::JointAction;
using gamelearn::Rng;

inline std::vector<JointAction> all_joints(const std::vector<std::size_t>& counts) {
  std::vector<JointAction> out;
  JointAction a(counts.size(), 0);
  while (true) {
    out.push_back(a);
    std::size_t i = counts.size();
    while (i > 0) {
      --i;
      if (++a[i] < counts[i]) break;
      a[i] = 0;
      if (i == 0) return out;
    }
    if (counts.empty()) return out;
  }
}

// Table game built from a callback, independent of Game::from_function.
template <typename F>
Game tabulate(const std::vector<std::size_t>& counts, F utility) {
  std::vector<double> table;
  for (const auto& a : all_joints(counts)) {
    for (std::size_t i = 0; i < counts.size(); ++i) table.push_back(utility(i, a));
  }
  return Game::from_table(counts, table);
}

// u^i(a) = v^i(a^i)
inline Game separable_game(const std::vector<std::vector<double>>& own) {
  std::vector<std::size_t> counts;
  for (const auto& v : own) counts.push_back(v.size());
  return tabulate(counts, [&](std::size_t i, const JointAction& a) { return own[i][a[i]]; });
}

inline std::vector<std::vector<double>> random_own(Rng& rng, const std::vector<std::size_t>& counts, double scale = 1.0) {
  std::vector<std::vector<double>> own;
  for (std::size_t n : counts) {
    std::vector<double> v(n);
    for (double& x : v) x = scale * rng.uniform();
    own.push_back(v);
  }
  return own;
}

// Every player receives w(a).
template <typename W>
Game identical_interest(const std::vector<std::size_t>& counts, W w) {
  return tabulate(counts, [&](std::size_t, const JointAction& a) { return w(a); });
}

// Potential game with a random potential plus player-specific dummy terms
// (u^i = phi + d^i(a^{-i})).
inline Game random_potential_game(Rng& rng, const std::vector<std::size_t>& counts, std::vector<double>& phi_out) {
  const auto joints = all_joints(counts);
  phi_out.clear();
  for (std::size_t k = 0; k < joints.size(); ++k) phi_out.push_back(rng.uniform());
  std::vector<std::vector<double>> dummy(counts.size());
  for (auto& d : dummy) {
    d.resize(joints.size());
    for (double& x : d) x = rng.uniform();
  }
  // d^i must not depend on a^i: use the value at a^i = 0.
  auto index_of = [&](const JointAction& a) {
    std::size_t idx = 0;
    for (std::size_t i = 0; i < counts.size(); ++i) idx = idx * counts[i] + a[i];
    return idx;
  };
  return tabulate(counts, [&](std::size_t i, const JointAction& a) {
    JointAction b = a;
    b[i] = 0;
    return phi_out[index_of(a)] + dummy[i][index_of(b)];
  });
}

// Symmetric connected random constraint map: each action can stay, reach its
// ring neighbours, plus random extra symmetric edges.
inline gamelearn::ConstrainedActionMap random_constraints(Rng& rng, const std::vector<std::size_t>& counts) {
  std::vector<std::vector<std::vector<std::size_t>>> moves;
  for (std::size_t n : counts) {
    std::vector<std::vector<char>> adj(n, std::vector<char>(n, 0));
    for (std::size_t a = 0; a < n; ++a) {
      adj[a][a] = 1;
      if (n > 1) {
        adj[a][(a + 1) % n] = adj[(a + 1) % n][a] = 1;
      }
      for (std::size_t b = a + 1; b < n; ++b) {
        if (rng.bernoulli(0.3)) adj[a][b] = adj[b][a] = 1;
      }
    }
    std::vector<std::vector<std::size_t>> m(n);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) {
        if (adj[a][b]) m[a].push_back(b);
      }
    }
    moves.push_back(m);
  }
  return gamelearn::ConstrainedActionMap(moves);
}

using Moves = std::vector<std::vector<std::vector<std::size_t>>>;
inline gamelearn::ConstrainedActionMap moves(Moves m) { return gamelearn::ConstrainedActionMap(std::move(m)); }

inline bool close_rel(double a, double b, double rel) {
  return std::fabs(a - b) <= rel * std::max({1.0, std::fabs(a), std::fabs(b)});
}

}  // namespace testsupport

namespace testsupport {

// Kernel of the partially synchronous binary log-linear chain by brute-force
// enumeration of wake sets, trials and acceptance sets.
inline std::vector<std::vector<double>> brute_kernel(const Game& g, const gamelearn::ConstrainedActionMap& c,
                                                     const std::vector<double>& wake, double eps) {
  const std::size_t n = g.num_players();
  const std::size_t S = g.joint_count();
  std::vector<std::vector<double>> P(S, std::vector<double>(S, 0.0));
  for (std::size_t s = 0; s < S; ++s) {
    const JointAction src = g.decode(s);
    for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
      double pw = 1.0;
      std::vector<std::size_t> W;
      for (std::size_t i = 0; i < n; ++i) {
        if (mask >> i & 1) {
          pw *= wake[i];
          W.push_back(i);
        } else {
          pw *= 1.0 - wake[i];
        }
      }
      if (pw == 0.0) continue;
      // Odometer over trial choices.
      std::vector<std::size_t> pick(W.size(), 0);
      while (true) {
        JointAction T = src;
        double pt = pw;
        for (std::size_t k = 0; k < W.size(); ++k) {
          const auto& opts = c.moves(W[k], src[W[k]]);
          T[W[k]] = opts[pick[k]];
          pt /= static_cast<double>(opts.size());
        }
        std::vector<double> acc(W.size());
        for (std::size_t k = 0; k < W.size(); ++k) {
          const std::size_t i = W[k];
          acc[k] = 1.0 / (1.0 + std::pow(eps, g.utility(i, T) - g.utility(i, src)));
        }
        for (std::size_t b = 0; b < (std::size_t{1} << W.size()); ++b) {
          double p = pt;
          JointAction dst = src;
          for (std::size_t k = 0; k < W.size(); ++k) {
            if (b >> k & 1) {
              p *= acc[k];
              dst[W[k]] = T[W[k]];
            } else {
              p *= 1.0 - acc[k];
            }
          }
          P[s][g.encode(dst)] += p;
        }
        std::size_t k = 0;
        for (; k < W.size(); ++k) {
          if (++pick[k] < c.moves(W[k], src[W[k]]).size()) break;
          pick[k] = 0;
        }
        if (k == W.size()) break;
      }
    }
  }
  return P;
}

// Stationary distribution by plain power iteration on a dense kernel.
inline std::vector<double> power_stationary(const std::vector<std::vector<double>>& P, int iters = 200000) {
  const std::size_t n = P.size();
  std::vector<double> pi(n, 1.0 / static_cast<double>(n)), next(n);
  for (int it = 0; it < iters; ++it) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t a = 0; a < n; ++a) {
      for (std::size_t b = 0; b < n; ++b) next[b] += pi[a] * P[a][b];
    }
    double diff = 0;
    for (std::size_t a = 0; a < n; ++a) diff += std::fabs(next[a] - pi[a]);
    pi.swap(next);
    if (diff < 1e-15) break;
  }
  return pi;
}

}  // namespace testsupport
