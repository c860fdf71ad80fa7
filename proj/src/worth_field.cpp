#include "gamelearn/worth_field.hpp"

#include <cmath>
#include <numbers>

#include "gamelearn/error.hpp"
#include "gamelearn/rng.hpp"

namespace gamelearn {

double gaussian_density(const Vec2& mean, const Cov2& cov, const Vec2& point) {
  const double det = cov.det();
  if (!(det > 0.0) || !(cov.xx > 0.0)) throw InvalidArgument("covariance is singular or not positive definite");
  const double dx = point.x - mean.x;
  const double dy = point.y - mean.y;
  // (d^T S^-1 d) with the 2x2 inverse written out
  const double q = (cov.yy * dx * dx - 2.0 * cov.xy * dx * dy + cov.xx * dy * dy) / det;
  return std::exp(-0.5 * q) / (2.0 * std::numbers::pi * std::sqrt(det));
}

WorthField::WorthField(std::size_t L, std::vector<GaussianComponent> components)
    : L_(L), components_(std::move(components)) {
  if (L_ == 0) throw InvalidArgument("grid side must be positive");
  if (!components_.empty()) {
    double total = 0.0;
    for (const auto& c : components_) {
      if (!(c.weight >= 0.0)) throw InvalidArgument("component weight must be non-negative");
      if (!c.cov.positive_definite()) throw InvalidArgument("component covariance is not positive definite");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("component weights must sum to 1");
  }
  raster_.resize(L_ * L_);
  for (std::size_t cell = 0; cell < raster_.size(); ++cell) raster_[cell] = evaluate(centroid(cell));
}

WorthField WorthField::from_raster(std::size_t L, std::vector<double> values) {
  if (L == 0) throw InvalidArgument("grid side must be positive");
  if (values.size() != L * L) throw InvalidArgument("raster size does not match the grid");
  for (double v : values) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw InvalidArgument("raster values must be finite and non-negative");
  }
  WorthField f;
  f.L_ = L;
  f.raster_ = std::move(values);
  return f;
}

double WorthField::evaluate(const Vec2& point) const {
  double f = 0.0;
  for (const auto& c : components_) f += c.weight * gaussian_density(c.mean, c.cov, point);
  return f;
}

double WorthField::total_mass() const {
  double s = 0.0;
  for (double v : raster_) s += v;
  return s;
}

double WorthField::local_gradient(std::size_t cell) const { return raster_gradient(raster_, L_, cell); }

Vec2 WorthField::centroid(std::size_t cell) const {
  return {static_cast<double>(cell % L_) + 0.5, static_cast<double>(cell / L_) + 0.5};
}

double raster_gradient(std::span<const double> raster, std::size_t L, std::size_t cell) {
  if (raster.size() != L * L || cell >= raster.size()) throw InvalidArgument("cell outside the raster");
  const std::size_t x = cell % L;
  const std::size_t y = cell / L;
  auto diff = [&](std::size_t lo, std::size_t hi, std::size_t span) {
    return span == 0 ? 0.0 : (raster[hi] - raster[lo]) / static_cast<double>(span);
  };
  const std::size_t x0 = x > 0 ? x - 1 : x, x1 = x + 1 < L ? x + 1 : x;
  const std::size_t y0 = y > 0 ? y - 1 : y, y1 = y + 1 < L ? y + 1 : y;
  const double gx = diff(y * L + x0, y * L + x1, x1 - x0);
  const double gy = diff(y0 * L + x, y1 * L + x, y1 - y0);
  return std::hypot(gx, gy);
}

WorthField generate_scenario(std::uint64_t seed, std::size_t L, const ScenarioOptions& options) {
  if (L < 8) throw InvalidArgument("scenario grids need L >= 8");
  if (options.min_components == 0 || options.min_components > options.max_components) {
    throw InvalidArgument("component range is empty");
  }
  if (options.dirichlet_alpha < 1.0 || std::floor(options.dirichlet_alpha) != options.dirichlet_alpha) {
    throw InvalidArgument("dirichlet_alpha must be a positive integer");
  }
  Rng rng(seed, 0x5ce7a210);
  const std::size_t m =
      options.min_components + rng.uniform_index(options.max_components - options.min_components + 1);
  const double side = static_cast<double>(L);
  const double lo = options.margin * side, hi = (1.0 - options.margin) * side;
  std::vector<GaussianComponent> comps(m);
  double total = 0.0;
  for (auto& c : comps) {
    c.mean = {lo + (hi - lo) * rng.uniform(), lo + (hi - lo) * rng.uniform()};
    const double sx = side * (options.sigma_low + (options.sigma_high - options.sigma_low) * rng.uniform());
    const double sy = side * (options.sigma_low + (options.sigma_high - options.sigma_low) * rng.uniform());
    c.cov = {sx * sx, 0.0, sy * sy};
    // Gamma(alpha, 1) with integer alpha: sum of alpha unit exponentials.
    double g = 0.0;
    for (int k = 0; k < static_cast<int>(options.dirichlet_alpha); ++k) g -= std::log1p(-rng.uniform());
    c.weight = g;
    total += g;
  }
  for (auto& c : comps) c.weight /= total;
  // Renormalise the last weight so the sum is exactly one up to rounding.
  double rest = 0.0;
  for (std::size_t j = 0; j + 1 < comps.size(); ++j) rest += comps[j].weight;
  comps.back().weight = 1.0 - rest;
  return WorthField(L, std::move(comps));
}

}  // namespace gamelearn
