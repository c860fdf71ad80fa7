#include "gamelearn/gmm_estimator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "gamelearn/error.hpp"

namespace gamelearn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double log_gaussian(const GaussianComponent& c, const Vec2& p) {
  const double det = c.cov.det();
  const double dx = p.x - c.mean.x;
  const double dy = p.y - c.mean.y;
  const double q = (c.cov.yy * dx * dx - 2.0 * c.cov.xy * dx * dy + c.cov.xx * dy * dy) / det;
  return -0.5 * q - std::log(2.0 * std::numbers::pi) - 0.5 * std::log(det);
}

// Fills resp (t * M + j) and returns the weighted log-likelihood.
double e_step(const GmmEstimate& est, const ObservationLog& log, std::vector<double>& resp) {
  const std::size_t M = est.count();
  const auto& pts = log.points();
  const auto& w = log.weights();
  resp.assign(pts.size() * M, 0.0);
  std::vector<double> lw(M);
  for (std::size_t j = 0; j < M; ++j) lw[j] = est.components[j].weight > 0.0 ? std::log(est.components[j].weight) : kNegInf;
  double ll = 0.0;
  std::vector<double> terms(M);
  for (std::size_t t = 0; t < pts.size(); ++t) {
    double top = kNegInf;
    for (std::size_t j = 0; j < M; ++j) {
      terms[j] = lw[j] + log_gaussian(est.components[j], pts[t]);
      top = std::max(top, terms[j]);
    }
    if (top == kNegInf) throw ConvergenceError("every component assigns zero density to an observation");
    double s = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      terms[j] = std::exp(terms[j] - top);
      s += terms[j];
    }
    for (std::size_t j = 0; j < M; ++j) resp[t * M + j] = terms[j] / s;
    ll += w[t] * (top + std::log(s));
  }
  return ll;
}

struct Moments {
  double mass = 0.0;
  Vec2 mean;
  Cov2 cov;
};

// Weighted mean and covariance with per-entry factors.
Moments moments(const ObservationLog& log, const std::vector<double>& factor) {
  const auto& pts = log.points();
  const auto& w = log.weights();
  Moments m;
  double sx = 0.0, sy = 0.0;
  for (std::size_t t = 0; t < pts.size(); ++t) {
    const double a = w[t] * factor[t];
    m.mass += a;
    sx += a * pts[t].x;
    sy += a * pts[t].y;
  }
  if (!(m.mass > 0.0)) return m;
  m.mean = {sx / m.mass, sy / m.mass};
  double cxx = 0.0, cxy = 0.0, cyy = 0.0;
  for (std::size_t t = 0; t < pts.size(); ++t) {
    const double a = w[t] * factor[t];
    const double dx = pts[t].x - m.mean.x, dy = pts[t].y - m.mean.y;
    cxx += a * dx * dx;
    cxy += a * dx * dy;
    cyy += a * dy * dy;
  }
  m.cov = {cxx / m.mass, cxy / m.mass, cyy / m.mass};
  return m;
}

double param_change(const GaussianComponent& a, const GaussianComponent& b) {
  return std::max({std::abs(a.weight - b.weight), std::abs(a.mean.x - b.mean.x), std::abs(a.mean.y - b.mean.y),
                   std::abs(a.cov.xx - b.cov.xx), std::abs(a.cov.xy - b.cov.xy), std::abs(a.cov.yy - b.cov.yy)});
}

Vec2 principal_axis(const Cov2& c) {
  const double half = 0.5 * (c.xx - c.yy);
  const double top = 0.5 * (c.xx + c.yy) + std::sqrt(half * half + c.xy * c.xy);
  double vx, vy;
  if (std::abs(c.xy) > 1e-300) {
    vx = c.xy;
    vy = top - c.xx;
  } else if (c.xx >= c.yy) {
    vx = 1.0;
    vy = 0.0;
  } else {
    vx = 0.0;
    vy = 1.0;
  }
  const double n = std::hypot(vx, vy);
  return {vx / n, vy / n};
}

void check_log(const ObservationLog& log) {
  if (log.empty()) throw InvalidArgument("observation log is empty");
}

}  // namespace

void ObservationLog::add(const Vec2& point, double count) {
  if (!(count > 0.0)) throw InvalidArgument("observation multiplicity must be positive");
  points_.push_back(point);
  weights_.push_back(count);
  total_ += count;
}

void ObservationLog::add_cell(std::size_t cell, const Vec2& centroid, double count) {
  if (!(count > 0.0)) throw InvalidArgument("observation multiplicity must be positive");
  auto it = slot_.find(cell);
  if (it == slot_.end()) {
    slot_.emplace(cell, points_.size());
    points_.push_back(centroid);
    weights_.push_back(count);
  } else {
    weights_[it->second] += count;
  }
  total_ += count;
}

double GmmEstimate::density(const Vec2& point) const {
  double f = 0.0;
  for (const auto& c : components) f += c.weight * gaussian_density(c.mean, c.cov, point);
  return f;
}

Cov2 floor_covariance(const Cov2& cov, double floor) {
  const double half = 0.5 * (cov.xx - cov.yy);
  const double root = std::sqrt(half * half + cov.xy * cov.xy);
  const double mid = 0.5 * (cov.xx + cov.yy);
  const double hi = mid + root, lo = mid - root;
  if (lo >= floor && std::isfinite(lo)) return cov;
  const double l1 = std::max(hi, floor), l2 = std::max(lo, floor);
  const Vec2 v = principal_axis(cov);
  // l1 v v^T + l2 u u^T with u perpendicular to v
  return {l1 * v.x * v.x + l2 * v.y * v.y, (l1 - l2) * v.x * v.y, l1 * v.y * v.y + l2 * v.x * v.x};
}

std::vector<double> responsibilities(const GmmEstimate& estimate, const ObservationLog& log) {
  check_log(log);
  std::vector<double> resp;
  e_step(estimate, log, resp);
  return resp;
}

double log_likelihood(const GmmEstimate& estimate, const ObservationLog& log) {
  check_log(log);
  std::vector<double> resp;
  return e_step(estimate, log, resp);
}

EmResult em_iterate(const ObservationLog& log, const GmmEstimate& estimate, std::size_t iters,
                    const EmOptions& options) {
  check_log(log);
  if (estimate.count() == 0) throw InvalidArgument("estimate has no components");
  EmResult result;
  result.estimate = estimate;
  std::vector<double> resp;
  double ll = e_step(result.estimate, log, resp);
  result.log_likelihood.push_back(ll);
  const std::size_t M = estimate.count();
  const double W = log.total_weight();
  std::vector<double> factor(log.size());
  for (std::size_t it = 0; it < iters; ++it) {
    GmmEstimate next = result.estimate;
    std::vector<std::size_t> starved;
    for (std::size_t j = 0; j < M; ++j) {
      for (std::size_t t = 0; t < log.size(); ++t) factor[t] = resp[t * M + j];
      const Moments m = moments(log, factor);
      auto& c = next.components[j];
      if (m.mass < options.starvation * W) {
        starved.push_back(j);
        c.weight = options.starvation;
        continue;
      }
      c.weight = m.mass / W;
      c.mean = m.mean;
      c.cov = floor_covariance(m.cov, options.covariance_floor);
    }
    double total = 0.0;
    for (const auto& c : next.components) total += c.weight;
    for (auto& c : next.components) c.weight /= total;
    double change = 0.0;
    for (std::size_t j = 0; j < M; ++j) change = std::max(change, param_change(next.components[j], result.estimate.components[j]));
    result.estimate = std::move(next);
    result.starved = std::move(starved);
    ++result.iterations;
    ll = e_step(result.estimate, log, resp);
    result.log_likelihood.push_back(ll);
    if (change < options.tolerance) break;
  }
  return result;
}

GmmEstimate single_component_fit(const ObservationLog& log, const EmOptions& options) {
  check_log(log);
  const Moments m = moments(log, std::vector<double>(log.size(), 1.0));
  GmmEstimate est;
  est.components.push_back({1.0, m.mean, floor_covariance(m.cov, options.covariance_floor)});
  return est;
}

std::size_t worth_weighted_multiplicity(double f_value, double f_mode, std::size_t V) {
  if (!(f_mode > 0.0)) throw InvalidArgument("f_mode must be positive");
  if (f_value < f_mode) return 1;
  return 1 + V * static_cast<std::size_t>(std::llround(f_value / f_mode));
}

std::size_t parameter_count(std::size_t components) {
  if (components == 0) throw InvalidArgument("a mixture needs at least one component");
  return 6 * components - 1;
}

double aic(const GmmEstimate& estimate, const ObservationLog& log) {
  const double ll = log_likelihood(estimate, log);
  if (!std::isfinite(ll)) throw ConvergenceError("mixture likelihood is degenerate");
  return 2.0 * static_cast<double>(parameter_count(estimate.count())) - 2.0 * ll;
}

double iaic(const GmmEstimate& estimate, const ObservationLog& log) { return -aic(estimate, log); }

double keep_probability(double iaic_current, double iaic_candidate, double temperature) {
  if (!(temperature > 0.0)) throw InvalidArgument("temperature must be positive");
  const double x = (iaic_current - iaic_candidate) / temperature;
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

std::vector<std::size_t> candidate_counts(std::size_t current) {
  if (current == 0) throw InvalidArgument("component count must be positive");
  if (current == 1) return {2};
  return {current + 1, current - 1};
}

double merge_score(const std::vector<double>& resp, std::size_t M, const ObservationLog& log, std::size_t j,
                   std::size_t k) {
  double s = 0.0;
  const auto& w = log.weights();
  for (std::size_t t = 0; t < log.size(); ++t) s += w[t] * resp[t * M + j] * resp[t * M + k];
  return s;
}

std::pair<std::size_t, std::size_t> merge_select(const GmmEstimate& estimate, const ObservationLog& log) {
  const std::size_t M = estimate.count();
  if (M < 2) throw InvalidArgument("merging needs at least two components");
  const auto resp = responsibilities(estimate, log);
  std::pair<std::size_t, std::size_t> best{0, 1};
  double best_score = -1.0;
  for (std::size_t j = 0; j < M; ++j) {
    for (std::size_t k = j + 1; k < M; ++k) {
      const double s = merge_score(resp, M, log, j, k);
      if (s > best_score) {
        best_score = s;
        best = {j, k};
      }
    }
  }
  return best;
}

GmmEstimate merge_components(const GmmEstimate& estimate, std::pair<std::size_t, std::size_t> pair,
                             const ObservationLog& log, const PartialEmOptions& options) {
  auto [j, k] = pair;
  const std::size_t M = estimate.count();
  if (j == k || j >= M || k >= M) throw InvalidArgument("invalid merge pair");
  if (j > k) std::swap(j, k);
  const auto& a = estimate.components[j];
  const auto& b = estimate.components[k];
  GaussianComponent merged;
  merged.weight = a.weight + b.weight;
  const double wa = a.weight / merged.weight, wb = b.weight / merged.weight;
  merged.mean = {wa * a.mean.x + wb * b.mean.x, wa * a.mean.y + wb * b.mean.y};
  merged.cov = {wa * a.cov.xx + wb * b.cov.xx, wa * a.cov.xy + wb * b.cov.xy, wa * a.cov.yy + wb * b.cov.yy};

  // The merged component claims the pooled responsibilities of the pair under
  // the pre-merge model; with those held fixed one update is the fixed point.
  const auto resp = responsibilities(estimate, log);
  std::vector<double> pooled(log.size());
  for (std::size_t t = 0; t < log.size(); ++t) pooled[t] = resp[t * M + j] + resp[t * M + k];
  if (options.iterations > 0) {
    const Moments m = moments(log, pooled);
    if (m.mass > options.em.starvation * log.total_weight()) {
      merged.mean = m.mean;
      merged.cov = floor_covariance(m.cov, options.em.covariance_floor);
    }
  }
  GmmEstimate out;
  for (std::size_t i = 0; i < M; ++i) {
    if (i == j) out.components.push_back(merged);
    else if (i != k) out.components.push_back(estimate.components[i]);
  }
  return out;
}

double split_score(const GmmEstimate& estimate, const ObservationLog& log, std::size_t k) {
  const std::size_t M = estimate.count();
  if (k >= M) throw InvalidArgument("component index out of range");
  const auto resp = responsibilities(estimate, log);
  std::map<std::pair<long long, long long>, double> bins;
  double total = 0.0;
  const auto& pts = log.points();
  const auto& w = log.weights();
  for (std::size_t t = 0; t < pts.size(); ++t) {
    const double a = w[t] * resp[t * M + k];
    if (a == 0.0) continue;
    bins[{static_cast<long long>(std::floor(pts[t].x)), static_cast<long long>(std::floor(pts[t].y))}] += a;
    total += a;
  }
  if (!(total > 0.0)) return 0.0;
  const auto& c = estimate.components[k];
  double j = 0.0;
  for (const auto& [key, mass] : bins) {
    const double p = mass / total;
    const Vec2 mid{static_cast<double>(key.first) + 0.5, static_cast<double>(key.second) + 0.5};
    const double q = std::max(gaussian_density(c.mean, c.cov, mid), 1e-300);
    j += p * std::log(p / q);
  }
  return j;
}

std::size_t split_select(const GmmEstimate& estimate, const ObservationLog& log) {
  check_log(log);
  const std::size_t M = estimate.count();
  if (M == 0) throw InvalidArgument("estimate has no components");
  std::size_t best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < M; ++k) {
    const double s = split_score(estimate, log, k);
    if (s > best_score) {
      best_score = s;
      best = k;
    }
  }
  return best;
}

GmmEstimate split_component(const GmmEstimate& estimate, std::size_t k, const ObservationLog& log, double offset,
                            Rng& rng, const PartialEmOptions& options) {
  const std::size_t M = estimate.count();
  if (k >= M) throw InvalidArgument("component index out of range");
  if (!(offset > 0.0)) throw InvalidArgument("split offset must be positive");
  const auto& parent = estimate.components[k];
  const Vec2 axis = principal_axis(parent.cov);
  const double sign = rng.bernoulli(0.5) ? 1.0 : -1.0;
  const double radius = std::sqrt(std::sqrt(parent.cov.det()));  // det^(1/d) with d = 2, as a variance
  GaussianComponent c1, c2;
  c1.weight = c2.weight = 0.5 * parent.weight;
  c1.cov = c2.cov = {radius * radius, 0.0, radius * radius};
  c1.mean = {parent.mean.x + sign * offset * axis.x, parent.mean.y + sign * offset * axis.y};
  c2.mean = {parent.mean.x - sign * offset * axis.x, parent.mean.y - sign * offset * axis.y};

  // Children share the parent's responsibilities under the pre-split model;
  // their combined weight stays the parent's.
  const auto resp = responsibilities(estimate, log);
  const auto& pts = log.points();
  std::vector<double> share(log.size()), f1(log.size()), f2(log.size());
  for (std::size_t t = 0; t < log.size(); ++t) share[t] = resp[t * M + k];
  const double floor_mass = options.em.starvation * log.total_weight();
  for (std::size_t it = 0; it < options.iterations; ++it) {
    const double l1 = std::log(c1.weight), l2 = std::log(c2.weight);
    for (std::size_t t = 0; t < log.size(); ++t) {
      const double a = l1 + log_gaussian(c1, pts[t]);
      const double b = l2 + log_gaussian(c2, pts[t]);
      const double top = std::max(a, b);
      const double ea = std::exp(a - top), eb = std::exp(b - top);
      f1[t] = share[t] * ea / (ea + eb);
      f2[t] = share[t] * eb / (ea + eb);
    }
    const Moments m1 = moments(log, f1), m2 = moments(log, f2);
    if (m1.mass <= floor_mass || m2.mass <= floor_mass) break;
    GaussianComponent n1 = c1, n2 = c2;
    n1.weight = parent.weight * m1.mass / (m1.mass + m2.mass);
    n2.weight = parent.weight - n1.weight;
    n1.mean = m1.mean;
    n2.mean = m2.mean;
    n1.cov = floor_covariance(m1.cov, options.em.covariance_floor);
    n2.cov = floor_covariance(m2.cov, options.em.covariance_floor);
    const double change = std::max(param_change(n1, c1), param_change(n2, c2));
    c1 = n1;
    c2 = n2;
    if (change < options.em.tolerance) break;
  }
  GmmEstimate out = estimate;
  out.components[k] = c1;
  out.components.push_back(c2);
  return out;
}

ProposalOutcome propose_component_count(const GmmEstimate& current, const ObservationLog& log,
                                        const ModelSelectionOptions& options, Rng& rng) {
  check_log(log);
  const std::size_t M = current.count();
  auto counts = candidate_counts(M);
  if (M + 1 > options.max_components) {
    counts.erase(std::remove(counts.begin(), counts.end(), M + 1), counts.end());
  }
  ProposalOutcome out;
  const EmResult refined = em_iterate(log, current, options.em_iterations, options.partial.em);
  out.estimate = refined.estimate;
  if (counts.empty()) return out;
  out.proposed = counts.size() == 1 ? counts[0] : counts[rng.uniform_index(counts.size())];
  GmmEstimate candidate;
  if (out.proposed > M) {
    candidate = split_component(refined.estimate, split_select(refined.estimate, log), log, options.split_offset, rng,
                                options.partial);
  } else {
    candidate = merge_components(refined.estimate, merge_select(refined.estimate, log), log, options.partial);
  }
  candidate = em_iterate(log, candidate, options.em_iterations, options.partial.em).estimate;
  out.iaic_current = iaic(out.estimate, log);
  out.iaic_candidate = iaic(candidate, log);
  if (!rng.bernoulli(keep_probability(out.iaic_current, out.iaic_candidate, options.temperature))) {
    out.estimate = std::move(candidate);
    out.switched = true;
  }
  return out;
}

SelectionRun select_component_count(const ObservationLog& log, const ModelSelectionOptions& options, Rng& rng,
                                    std::size_t patience, std::size_t max_rounds) {
  SelectionRun run;
  run.estimate = em_iterate(log, single_component_fit(log, options.partial.em), options.em_iterations,
                            options.partial.em)
                     .estimate;
  std::size_t quiet = 0;
  while (run.rounds < max_rounds && quiet < patience) {
    auto outcome = propose_component_count(run.estimate, log, options, rng);
    run.estimate = std::move(outcome.estimate);
    ++run.rounds;
    run.history.push_back(run.estimate.count());
    quiet = outcome.switched ? 0 : quiet + 1;
  }
  return run;
}

}  // namespace gamelearn
