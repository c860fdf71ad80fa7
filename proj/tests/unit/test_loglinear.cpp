#include <doctest.h>

#include <cmath>
#include <map>

#include "../support.hpp"
#include "gamelearn/coverage.hpp"
#include "gamelearn/error.hpp"
#include "gamelearn/loglinear.hpp"

using namespace gamelearn;

namespace {

// Gibbs weights exp(w / tau), normalised.
std::vector<double> gibbs(const std::vector<double>& w, double tau) {
  double mx = w[0];
  for (double x : w) mx = std::max(mx, x);
  std::vector<double> p(w.size());
  double s = 0;
  for (std::size_t k = 0; k < w.size(); ++k) s += (p[k] = std::exp((w[k] - mx) / tau));
  for (double& x : p) x /= s;
  return p;
}

}  // namespace

TEST_CASE("revision probability boundary values") {
  RevisionPolicy p;
  CHECK(p.c() == 0.0);
  CHECK(revision_probability(p, 0.0, 0.0) == doctest::Approx(1.0 - 1e-6).epsilon(1e-15));
  CHECK(revision_probability(p, 1.0, 0.0) == doctest::Approx(std::exp(-4.0)).epsilon(1e-14));
  CHECK(revision_probability(p, 1.0, 0.0) == doctest::Approx(0.01832).epsilon(1e-3));
  for (double F : {0.0, 0.3, 0.77, 1.0}) CHECK(revision_probability(p, F, 1.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK_THROWS_AS(revision_probability(p, 1.2, 0.0), InvalidArgument);
  CHECK_THROWS_AS(revision_probability(p, 0.5, -0.1), InvalidArgument);
  CHECK_THROWS_AS(revision_probability(p, std::nan(""), 0.1), InvalidArgument);
}

TEST_CASE("revision probability is non-increasing in F and stays inside (0, 1)") {
  RevisionPolicy p;
  double prev = 2.0;
  for (int k = 0; k <= 100; ++k) {
    const double F = k / 100.0;
    const double r = revision_probability(p, F, 0.0);
    CHECK(r <= prev);
    prev = r;
    for (double G : {0.0, 0.25, 0.5, 1.0}) {
      const double q = revision_probability(p, F, G);
      CHECK(q > 0.0);
      CHECK(q < 1.0);
    }
  }
}

TEST_CASE("switch probability is the logistic of the gain") {
  for (double tau : {0.1, 1.0}) {
    for (double d : {-1.0, 0.0, 1.0}) {
      CHECK(switch_probability(d, tau) == doctest::Approx(1.0 / (1.0 + std::exp(-d / tau))).epsilon(1e-14));
      CHECK(switch_probability(d, tau) + switch_probability(-d, tau) == doctest::Approx(1.0).epsilon(1e-15));
    }
  }
  CHECK(switch_probability(0.0, 0.3) == 0.5);
  CHECK(switch_probability(-1e6, 1e-3) == 0.0);
  CHECK_THROWS_AS(switch_probability(1.0, 0.0), InvalidArgument);
}

TEST_CASE("temperature and epsilon round trip") {
  LoglinearState s;
  s.temperature = 0.25;
  CHECK(s.epsilon() == doctest::Approx(std::exp(-4.0)));
  CHECK(temperature_from_epsilon(s.epsilon()) == doctest::Approx(0.25));
  CHECK_THROWS_AS(temperature_from_epsilon(0.0), InvalidArgument);
}

TEST_CASE("constraint validation") {
  CHECK(validate_constraints(ConstrainedActionMap::complete({3, 2})).ok());
  const auto one_way = testsupport::moves({{{0, 1}, {1}, {1, 2}}});
  const auto r = validate_constraints(one_way);
  CHECK_FALSE(r.symmetric);
  REQUIRE(r.one_way.has_value());
  CHECK(r.one_way->from == 0);
  CHECK(r.one_way->to == 1);
  const auto split = testsupport::moves({{{0}, {1}}});
  CHECK_FALSE(validate_constraints(split).connected);
  const auto empty = testsupport::moves({{{}, {1}}});
  CHECK_FALSE(validate_constraints(empty).non_empty);
  CHECK_THROWS_AS(testsupport::moves({{{0, 5}}}), InvalidArgument);

  CoverageWorld world(WorthField(4, {}), {0, 5});
  CHECK(validate_constraints(world.constraint_map()).ok());
}

TEST_CASE("LLL at infinite temperature samples uniformly") {
  const Game g = Game::from_table({3}, {0.0, 5.0, -2.0});
  LoglinearState s{{0}, 1e12, 0};
  Rng rng(1);
  std::vector<int> hits(3, 0);
  const int n = 60000;
  for (int k = 0; k < n; ++k) {
    lll_step(g, s, rng);
    ++hits[s.joint[0]];
  }
  for (int h : hits) CHECK(std::abs(h - n / 3) < 4 * std::sqrt(n * (1.0 / 3) * (2.0 / 3)));
}

TEST_CASE("LLL single player picks the better action with the logit weight") {
  const Game g = Game::from_table({2}, {0.0, 1.0});
  LoglinearState s{{0}, 1.0, 0};
  Rng rng(2);
  const int n = 200000;
  int second = 0;
  for (int k = 0; k < n; ++k) {
    s.joint = {0};
    lll_step(g, s, rng);
    second += s.joint[0] == 1;
  }
  const double p = std::exp(1.0) / (1.0 + std::exp(1.0));
  CHECK(std::fabs(second / double(n) - p) < 4 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("LLL visits concentrate on the potential maximiser") {
  const std::vector<double> w{1.0, 0.0, 0.0, 0.5};
  const Game g = testsupport::identical_interest({2, 2}, [&](const JointAction& a) { return w[a[0] * 2 + a[1]]; });
  const auto pi = gibbs(w, 0.1);
  LoglinearState s{{1, 0}, 0.1, 0};
  Rng rng(3);
  std::vector<double> visits(4, 0);
  const int n = 100000;
  for (int k = 0; k < n; ++k) {
    lll_step(g, s, rng);
    visits[s.joint[0] * 2 + s.joint[1]] += 1.0 / n;
  }
  CHECK(pi[0] > 0.99);
  CHECK(visits[0] >= 0.9);
  CHECK(visits[0] == doctest::Approx(pi[0]).epsilon(0.01));
}

TEST_CASE("BLLL degenerate and symmetric choices") {
  const Game g = Game::from_table({2}, {0.3, 0.3});
  const auto stay_only = testsupport::moves({{{0}, {1}}});
  LoglinearState s{{1}, 0.1, 0};
  Rng rng(4);
  for (int k = 0; k < 100; ++k) {
    blll_step(g, s, stay_only, rng);
    CHECK(s.joint[0] == 1);
  }
  // Equal utilities: adopt with probability 1/2.
  const auto full = ConstrainedActionMap::complete({2});
  int adopted = 0, offered = 0;
  for (int k = 0; k < 100000; ++k) {
    s.joint = {0};
    const auto out = blll_step(g, s, full, rng);
    if (out.trials[0] == 1) {
      ++offered;
      adopted += out.adopted[0];
    }
  }
  CHECK(std::fabs(adopted / double(offered) - 0.5) < 4 * std::sqrt(0.25 / offered));
}

TEST_CASE("BLLL modal state is the potential maximiser") {
  Rng gen(5);
  std::vector<double> w(9);
  for (double& x : w) x = gen.uniform();
  std::size_t best = 0;
  for (std::size_t k = 1; k < 9; ++k) {
    if (w[k] > w[best]) best = k;
  }
  const Game g = testsupport::identical_interest({3, 3}, [&](const JointAction& a) { return w[a[0] * 3 + a[1]]; });
  const auto full = ConstrainedActionMap::complete({3, 3});
  LoglinearState s{{0, 0}, 0.05, 0};
  Rng rng(6);
  std::vector<int> visits(9, 0);
  for (int k = 0; k < 100000; ++k) {
    blll_step(g, s, full, rng);
    ++visits[s.joint[0] * 3 + s.joint[1]];
  }
  std::size_t modal = 0;
  for (std::size_t k = 1; k < 9; ++k) {
    if (visits[k] > visits[modal]) modal = k;
  }
  CHECK(modal == best);
}

TEST_CASE("P-SBLLL with nobody awake leaves the state alone") {
  const Game g = Game::from_table({2, 2}, {1, 1, 0, 0, 0, 0, 1, 1});
  const auto full = ConstrainedActionMap::complete({2, 2});
  LoglinearState s{{0, 1}, 0.1, 0};
  Rng rng(7);
  const std::vector<double> never{0.0, 0.0};
  for (int k = 0; k < 50; ++k) {
    const auto out = psblll_step(g, s, full, never, rng);
    CHECK(out.awake.empty());
    CHECK(s.joint == JointAction{0, 1});
  }
  CHECK(s.iteration == 50);
}

TEST_CASE("P-SBLLL sleepers repeat their action") {
  Rng gen(8);
  std::vector<double> table(2 * 9);
  for (double& x : table) x = gen.uniform();
  const Game g = Game::from_table({3, 3}, table);
  const auto full = ConstrainedActionMap::complete({3, 3});
  LoglinearState s{{2, 1}, 0.2, 0};
  Rng rng(9);
  const std::vector<double> wake{0.6, 0.0};
  for (int k = 0; k < 200; ++k) {
    psblll_step(g, s, full, wake, rng);
    CHECK(s.joint[1] == 1);
  }
}

TEST_CASE("P-SBLLL single awake player switches with the logistic probability") {
  for (double tau : {0.1, 1.0}) {
    for (double d : {-1.0, 0.0, 1.0}) {
      const Game g = Game::from_table({2}, {0.0, d});
      const auto to_other = testsupport::moves({{{1}, {0}}});
      LoglinearState s{{0}, tau, 0};
      Rng rng(10);
      const std::size_t awake[1] = {0};
      const int n = 40000;
      int moved = 0;
      for (int k = 0; k < n; ++k) {
        s.joint = {0};
        psblll_step_with_awake(g, s, to_other, awake, rng);
        moved += s.joint[0] == 1;
      }
      const double p = 1.0 / (1.0 + std::exp(-d / tau));
      CHECK(std::fabs(moved / double(n) - p) <= 4 * std::sqrt(p * (1 - p) / n) + 1e-12);
    }
  }
}

TEST_CASE("P-SBLLL awake players judge the all-trials profile") {
  // Player 0 gains only if player 1 also moves; with both forced awake and the
  // only trial being the other action, both see the joint gain.
  const Game g = testsupport::identical_interest({2, 2}, [](const JointAction& a) {
    return (a[0] == 1 && a[1] == 1) ? 10.0 : 0.0;
  });
  const auto swap = testsupport::moves({{{1}, {0}}, {{1}, {0}}});
  LoglinearState s{{0, 0}, 0.1, 0};
  Rng rng(11);
  const std::size_t both[2] = {0, 1};
  int joint_moves = 0;
  for (int k = 0; k < 1000; ++k) {
    s.joint = {0, 0};
    psblll_step_with_awake(g, s, swap, both, rng);
    joint_moves += s.joint == JointAction{1, 1};
  }
  CHECK(joint_moves == 1000);
}

TEST_CASE("forced single wake matches BLLL in distribution") {
  const Game g = Game::from_table({2, 2}, {0.3, 0.1, 0.0, 0.4, 0.6, 0.2, 0.5, 0.9});
  const auto full = ConstrainedActionMap::complete({2, 2});
  const int n = 100000;
  std::map<std::pair<int, int>, double> a, b;
  LoglinearState s1{{0, 0}, 0.5, 0}, s2{{0, 0}, 0.5, 0};
  Rng r1(12), r2(13), pick(14);
  for (int k = 0; k < n; ++k) {
    const int from1 = int(g.encode(s1.joint));
    blll_step(g, s1, full, r1);
    a[{from1, int(g.encode(s1.joint))}] += 1.0 / n;
    const int from2 = int(g.encode(s2.joint));
    const std::size_t who[1] = {pick.uniform_index(2)};
    psblll_step_with_awake(g, s2, full, who, r2);
    b[{from2, int(g.encode(s2.joint))}] += 1.0 / n;
  }
  double tv = 0;
  for (int x = 0; x < 4; ++x) {
    for (int y = 0; y < 4; ++y) tv += std::fabs(a[{x, y}] - b[{x, y}]);
  }
  CHECK(tv / 2 <= 0.02);
}

TEST_CASE("step functions reject bad input") {
  const Game g = Game::from_table({2}, {0.0, 1.0});
  const auto full = ConstrainedActionMap::complete({2});
  Rng rng(1);
  LoglinearState bad{{5}, 0.1, 0};
  CHECK_THROWS_AS(blll_step(g, bad, full, rng), InvalidArgument);
  LoglinearState cold{{0}, 0.0, 0};
  CHECK_THROWS_AS(lll_step(g, cold, rng), InvalidArgument);
  LoglinearState ok{{0}, 0.1, 0};
  const std::vector<double> wrong{0.5, 0.5};
  CHECK_THROWS_AS(psblll_step(g, ok, full, wrong, rng), InvalidArgument);
}
