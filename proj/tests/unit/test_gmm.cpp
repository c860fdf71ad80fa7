#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "gamelearn/error.hpp"
#include "gamelearn/gmm_estimator.hpp"

using namespace gamelearn;

namespace {

GaussianComponent iso(double w, double x, double y, double s) { return {w, {x, y}, {s * s, 0.0, s * s}}; }

void draw(ObservationLog& log, Rng& rng, const Vec2& mean, double sigma, std::size_t n) {
  for (std::size_t t = 0; t < n; ++t) log.add({mean.x + sigma * rng.normal(), mean.y + sigma * rng.normal()});
}

double dist(const Vec2& a, const Vec2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

double weight_sum(const GmmEstimate& e) {
  double s = 0;
  for (const auto& c : e.components) s += c.weight;
  return s;
}

bool same(const GaussianComponent& a, const GaussianComponent& b) {
  return a.weight == b.weight && a.mean.x == b.mean.x && a.mean.y == b.mean.y && a.cov.xx == b.cov.xx &&
         a.cov.xy == b.cov.xy && a.cov.yy == b.cov.yy;
}

// Closest-mean distance from target to any component.
double nearest(const GmmEstimate& e, const Vec2& target) {
  double d = 1e300;
  for (const auto& c : e.components) d = std::min(d, dist(c.mean, target));
  return d;
}

}  // namespace

TEST_CASE("observation log") {
  ObservationLog log;
  log.add({1.0, 2.0});
  log.add_cell(7, {7.5, 0.5}, 3.0);
  log.add_cell(7, {7.5, 0.5}, 2.0);
  CHECK(log.size() == 2);
  CHECK(log.total_weight() == 6.0);
  CHECK(log.weights()[1] == 5.0);
}

TEST_CASE("worth-weighted multiplicity") {
  CHECK(worth_weighted_multiplicity(0.5, 1.0, 3) == 1);
  CHECK(worth_weighted_multiplicity(1.0, 1.0, 3) == 4);
  CHECK(worth_weighted_multiplicity(2.4, 1.0, 3) == 7);
  CHECK(worth_weighted_multiplicity(2.6, 1.0, 3) == 10);
}

TEST_CASE("single component fit is the sample moments") {
  Rng rng(1);
  ObservationLog log;
  draw(log, rng, {5, 7}, 2.0, 500);
  double mx = 0, my = 0;
  for (const auto& p : log.points()) mx += p.x, my += p.y;
  mx /= 500, my /= 500;
  double sxx = 0, sxy = 0, syy = 0;
  for (const auto& p : log.points()) {
    sxx += (p.x - mx) * (p.x - mx);
    sxy += (p.x - mx) * (p.y - my);
    syy += (p.y - my) * (p.y - my);
  }
  GmmEstimate start{{iso(1.0, 0, 0, 1)}};
  const auto r = em_iterate(log, start, 1);
  REQUIRE(r.estimate.count() == 1);
  const auto& c = r.estimate.components[0];
  CHECK(c.mean.x == doctest::Approx(mx).epsilon(1e-12));
  CHECK(c.mean.y == doctest::Approx(my).epsilon(1e-12));
  CHECK(c.cov.xx == doctest::Approx(sxx / 500).epsilon(1e-12));
  CHECK(c.cov.xy == doctest::Approx(sxy / 500).epsilon(1e-9));
  CHECK(c.cov.yy == doctest::Approx(syy / 500).epsilon(1e-12));
  const auto s = single_component_fit(log);
  CHECK(s.components[0].mean.x == doctest::Approx(mx).epsilon(1e-12));

  const auto none = em_iterate(log, start, 0);
  CHECK(same(none.estimate.components[0], start.components[0]));
  CHECK_THROWS_AS(em_iterate(ObservationLog{}, start, 1), InvalidArgument);
}

TEST_CASE("EM recovers two separated clusters and never lowers the likelihood") {
  Rng rng(2);
  ObservationLog log;
  draw(log, rng, {10, 10}, 1.0, 1000);
  draw(log, rng, {20, 22}, 1.0, 1000);
  GmmEstimate start{{iso(0.5, 8, 13, 3), iso(0.5, 23, 19, 3)}};
  const auto r = em_iterate(log, start, 200);
  CHECK(nearest(r.estimate, {10, 10}) <= 0.5);
  CHECK(nearest(r.estimate, {20, 22}) <= 0.5);
  CHECK(weight_sum(r.estimate) == doctest::Approx(1.0).epsilon(1e-9));
  for (std::size_t k = 1; k < r.log_likelihood.size(); ++k) {
    CHECK(r.log_likelihood[k] >= r.log_likelihood[k - 1] - 1e-9);
  }
  const auto resp = responsibilities(r.estimate, log);
  for (std::size_t t = 0; t < log.size(); ++t) CHECK(resp[2 * t] + resp[2 * t + 1] == doctest::Approx(1.0).epsilon(1e-12));

  // Monotone on a messy three-component start too.
  GmmEstimate messy{{iso(0.2, 15, 15, 1), iso(0.3, 5, 25, 2), iso(0.5, 25, 5, 4)}};
  const auto m = em_iterate(log, messy, 60);
  for (std::size_t k = 1; k < m.log_likelihood.size(); ++k) CHECK(m.log_likelihood[k] >= m.log_likelihood[k - 1] - 1e-9);
}

TEST_CASE("covariance floor and starvation") {
  const Cov2 c = floor_covariance({1e-6, 0.0, 4.0}, 1e-3);
  CHECK(c.xx == doctest::Approx(1e-3));
  CHECK(c.yy == doctest::Approx(4.0));
  ObservationLog log;
  for (int t = 0; t < 50; ++t) log.add({3.0, 3.0});
  GmmEstimate start{{iso(0.5, 3, 3, 1), iso(0.5, 30, 30, 0.5)}};
  EmOptions opt;
  opt.covariance_floor = 1e-3;
  const auto r = em_iterate(log, start, 5, opt);
  CHECK(r.starved == std::vector<std::size_t>{1});
  for (const auto& comp : r.estimate.components) {
    CHECK(comp.cov.positive_definite());
    CHECK(comp.weight > 0.0);
  }
  CHECK(weight_sum(r.estimate) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("AIC bookkeeping") {
  CHECK(parameter_count(1) == 5);
  CHECK(parameter_count(3) == 17);
  Rng rng(3);
  ObservationLog log;
  draw(log, rng, {8, 8}, 1.5, 300);
  const GmmEstimate one{{iso(1.0, 8, 8, 1.5)}};
  CHECK(aic(one, log) == doctest::Approx(2.0 * 5 - 2.0 * log_likelihood(one, log)));
  CHECK(iaic(one, log) == -aic(one, log));
  const GmmEstimate dup{{iso(0.5, 8, 8, 1.5), iso(0.5, 8, 8, 1.5)}};
  CHECK(log_likelihood(dup, log) == doctest::Approx(log_likelihood(one, log)).epsilon(1e-12));
  CHECK(aic(dup, log) - aic(one, log) == doctest::Approx(12.0).epsilon(1e-9));
}

TEST_CASE("true component count wins the AIC comparison") {
  std::size_t wins = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, 9);
    ObservationLog log;
    draw(log, rng, {10, 10}, 1.2, 1000);
    draw(log, rng, {25, 20}, 1.2, 1000);
    const auto two = em_iterate(log, GmmEstimate{{iso(0.5, 12, 8, 3), iso(0.5, 22, 23, 3)}}, 200).estimate;
    Rng split_rng(seed, 10);
    const auto three = em_iterate(log, split_component(two, 0, log, 0.28, split_rng), 200).estimate;
    if (aic(two, log) < aic(three, log)) ++wins;
  }
  CHECK(wins >= 16);
}

TEST_CASE("component-count logit") {
  CHECK(keep_probability(3.0, 3.0, 0.1) == doctest::Approx(0.5));
  CHECK(keep_probability(10.0, 0.0, 0.1) >= 1 - 1e-6);
  CHECK(keep_probability(0.0, 10.0, 0.1) <= 1e-6);
  CHECK(keep_probability(1.1, 1.0, 0.1) == doctest::Approx(std::exp(1.0) / (1 + std::exp(1.0))).epsilon(1e-9));
  CHECK(candidate_counts(1) == std::vector<std::size_t>{2});
  const auto c3 = candidate_counts(3);
  CHECK(std::is_permutation(c3.begin(), c3.end(), std::vector<std::size_t>{4, 2}.begin()));
}

TEST_CASE("merge selection") {
  Rng rng(4);
  ObservationLog log;
  draw(log, rng, {5, 5}, 1.0, 300);
  draw(log, rng, {30, 30}, 1.0, 300);
  const GmmEstimate twins{{iso(0.25, 5, 5, 1), iso(0.5, 30, 30, 1), iso(0.25, 5, 5, 1)}};
  auto p = merge_select(twins, log);
  if (p.first > p.second) std::swap(p.first, p.second);
  CHECK(p == std::pair<std::size_t, std::size_t>{0, 2});

  const GmmEstimate overlapping{{iso(0.25, 4.5, 5, 1), iso(0.5, 30, 30, 1), iso(0.25, 5.5, 5, 1)}};
  p = merge_select(overlapping, log);
  if (p.first > p.second) std::swap(p.first, p.second);
  CHECK(p == std::pair<std::size_t, std::size_t>{0, 2});

  const GmmEstimate pair{{iso(0.5, 5, 5, 1), iso(0.5, 30, 30, 1)}};
  p = merge_select(pair, log);
  CHECK(std::min(p.first, p.second) == 0);
  CHECK(std::max(p.first, p.second) == 1);
  CHECK_THROWS_AS(merge_select(GmmEstimate{{iso(1, 5, 5, 1)}}, log), InvalidArgument);
}

TEST_CASE("merging") {
  Rng rng(5);
  ObservationLog log;
  draw(log, rng, {5, 5}, 1.0, 400);
  draw(log, rng, {30, 30}, 1.0, 400);
  const GmmEstimate twins{{iso(0.25, 5, 5, 1), iso(0.5, 30, 30, 1), iso(0.25, 5, 5, 1)}};
  PartialEmOptions none;
  none.iterations = 0;
  const auto merged0 = merge_components(twins, {0, 2}, log, none);
  REQUIRE(merged0.count() == 2);
  CHECK(merged0.components[0].weight == 0.5);
  CHECK(merged0.components[0].mean.x == 5.0);
  CHECK(merged0.components[0].cov.xx == 1.0);
  CHECK(same(merged0.components[1], twins.components[1]));

  const auto merged = merge_components(twins, {0, 2}, log);
  CHECK(same(merged.components[1], twins.components[1]));
  CHECK(weight_sum(merged) == doctest::Approx(1.0).epsilon(1e-9));

  // Three components on two clusters: merging the chosen pair costs little.
  ObservationLog two;
  draw(two, rng, {10, 10}, 1.0, 1000);
  draw(two, rng, {25, 22}, 1.0, 1000);
  const auto fit3 = em_iterate(two, GmmEstimate{{iso(0.3, 9, 10, 2), iso(0.3, 11, 10, 2), iso(0.4, 25, 22, 2)}}, 200).estimate;
  const auto fit2 = em_iterate(two, GmmEstimate{{iso(0.5, 12, 8, 3), iso(0.5, 22, 23, 3)}}, 200).estimate;
  const auto m = merge_components(fit3, merge_select(fit3, two), two);
  const double ll_m = log_likelihood(m, two), ll_2 = log_likelihood(fit2, two);
  CHECK(ll_2 - ll_m <= 0.02 * std::fabs(ll_2));
}

TEST_CASE("split scores") {
  Rng rng(6);
  ObservationLog single;
  draw(single, rng, {15, 15}, 2.0, 2000);
  const auto fit = single_component_fit(single);
  CHECK(split_score(fit, single, 0) <= 0.1);
  CHECK(split_select(fit, single) == 0);

  ObservationLog bimodal;
  draw(bimodal, rng, {8, 8}, 1.0, 1000);
  draw(bimodal, rng, {24, 24}, 1.0, 1000);
  const auto wide = single_component_fit(bimodal);
  CHECK(split_score(wide, bimodal, 0) >= 1.0);

  const GmmEstimate mixed{{iso(0.5, 8, 8, 1), iso(0.5, 16, 16, 8)}};
  CHECK(split_select(mixed, bimodal) == 1);
}

TEST_CASE("splitting") {
  Rng rng(7);
  ObservationLog log;
  draw(log, rng, {10, 10}, 1.0, 1000);
  draw(log, rng, {22, 18}, 1.0, 1000);
  const auto wide = single_component_fit(log);
  Rng srng(8);
  const auto s = split_component(wide, 0, log, 0.28, srng);
  REQUIRE(s.count() == 2);
  CHECK(nearest(s, {10, 10}) <= 1.0);
  CHECK(nearest(s, {22, 18}) <= 1.0);
  CHECK(weight_sum(s) == doctest::Approx(1.0).epsilon(1e-9));

  // Untouched components and the split/merge round trip.
  const GmmEstimate three{{iso(0.2, 30, 30, 1), iso(0.6, 16, 14, 6), iso(0.2, 3, 30, 1)}};
  PartialEmOptions none;
  none.iterations = 0;
  const auto raw = split_component(three, 1, log, 0.28, srng, none);
  REQUIRE(raw.count() == 4);
  CHECK(same(raw.components[0], three.components[0]));
  CHECK(same(raw.components[2], three.components[2]));
  CHECK(raw.components[1].weight == 0.3);
  CHECK(raw.components[3].weight == 0.3);
  CHECK(dist(raw.components[1].mean, raw.components[3].mean) == doctest::Approx(0.56));
  const double root_det = std::sqrt(three.components[1].cov.det());
  CHECK(raw.components[1].cov.xx == doctest::Approx(root_det));
  CHECK(raw.components[1].cov.xy == 0.0);
  const auto back = merge_components(raw, {1, 3}, log, none);
  REQUIRE(back.count() == 3);
  CHECK(back.components[1].weight == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(dist(back.components[1].mean, three.components[1].mean) <= 0.28);

  const auto refined = split_component(three, 1, log, 0.28, srng);
  CHECK(same(refined.components[0], three.components[0]));
  CHECK(same(refined.components[2], three.components[2]));
  CHECK(weight_sum(refined) == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("model selection finds the component count") {
  std::size_t hits = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(seed, 11);
    const std::size_t M = 1 + seed % 5;
    std::vector<Vec2> means;
    while (means.size() < M) {
      const Vec2 c{4 + 32 * rng.uniform(), 4 + 32 * rng.uniform()};
      bool ok = true;
      for (const auto& m : means) ok = ok && dist(m, c) >= 10.0;
      if (ok) means.push_back(c);
    }
    ObservationLog log;
    for (std::size_t j = 0; j < M; ++j) draw(log, rng, means[j], 1.0 + 0.5 * rng.uniform(), 2000 / M);
    ModelSelectionOptions opt;
    Rng sel(seed, 12);
    const auto run = select_component_count(log, opt, sel);
    if (run.estimate.count() == M) ++hits;
  }
  CHECK(hits >= 16);
}
