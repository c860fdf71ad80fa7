#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace gamelearn {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

// Symmetric 2x2 matrix [[xx, xy], [xy, yy]].
struct Cov2 {
  double xx = 1.0;
  double xy = 0.0;
  double yy = 1.0;

  double det() const { return xx * yy - xy * xy; }
  bool positive_definite() const { return xx > 0.0 && det() > 0.0; }
};

struct GaussianComponent {
  double weight = 1.0;
  Vec2 mean;
  Cov2 cov;
};

// Bivariate normal density; throws InvalidArgument on a singular covariance.
double gaussian_density(const Vec2& mean, const Cov2& cov, const Vec2& point);

// Worth over an L x L grid of unit cells. Cell index = y * L + x and its
// centroid is (x + 0.5, y + 0.5). The raster holds f at every centroid.
class WorthField {
 public:
  WorthField() = default;
  // Weights must sum to 1 within 1e-9. An empty list gives the zero field.
  WorthField(std::size_t L, std::vector<GaussianComponent> components);
  // Arbitrary non-negative cell values (no mixture behind them).
  static WorthField from_raster(std::size_t L, std::vector<double> values);

  std::size_t side() const { return L_; }
  std::size_t cell_count() const { return L_ * L_; }
  const std::vector<GaussianComponent>& components() const { return components_; }

  double evaluate(const Vec2& point) const;
  double value(std::size_t cell) const { return raster_[cell]; }
  const std::vector<double>& raster() const { return raster_; }
  double total_mass() const;
  double local_gradient(std::size_t cell) const;

  Vec2 centroid(std::size_t cell) const;
  std::size_t cell_at(std::size_t x, std::size_t y) const { return y * L_ + x; }

 private:
  std::size_t L_ = 0;
  std::vector<GaussianComponent> components_;
  std::vector<double> raster_;
};

// Magnitude of the central-difference gradient of a raster (one-sided at the
// border).
double raster_gradient(std::span<const double> raster, std::size_t L, std::size_t cell);

struct ScenarioOptions {
  std::size_t min_components = 1;
  std::size_t max_components = 5;
  double margin = 0.1;        // fraction of L kept clear at each border
  double sigma_low = 1.0 / 20.0;   // sigma range as a fraction of L
  double sigma_high = 1.0 / 8.0;
  double dirichlet_alpha = 2.0;  // symmetric; integer values only
};

// Random mixture: component count uniform in range, means uniform over the
// interior, Dirichlet weights, diagonal covariances.
WorthField generate_scenario(std::uint64_t seed, std::size_t L, const ScenarioOptions& options = {});

}  // namespace gamelearn
