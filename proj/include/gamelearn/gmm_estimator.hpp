#pragma once

#include <cstddef>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

#include "gamelearn/rng.hpp"
#include "gamelearn/worth_field.hpp"

namespace gamelearn {

// Observed coordinates with multiplicities. Entries added through add_cell
// with the same key share one slot, so a long walk over a small area stays
// compact.
class ObservationLog {
 public:
  void add(const Vec2& point, double count = 1.0);
  void add_cell(std::size_t cell, const Vec2& centroid, double count = 1.0);

  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }
  double total_weight() const { return total_; }
  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<double>& weights() const { return weights_; }

 private:
  std::vector<Vec2> points_;
  std::vector<double> weights_;
  std::unordered_map<std::size_t, std::size_t> slot_;
  double total_ = 0.0;
};

struct GmmEstimate {
  std::vector<GaussianComponent> components;
  std::size_t count() const { return components.size(); }
  double density(const Vec2& point) const;
};

struct EmOptions {
  double covariance_floor = 1e-3;  // smallest eigenvalue allowed
  double tolerance = 1e-6;         // stop when no parameter moves more than this
  double starvation = 1e-6;        // fraction of total weight below which a component is starved
};

struct EmResult {
  GmmEstimate estimate;
  std::size_t iterations = 0;
  std::vector<double> log_likelihood;   // before each iteration, then after the last
  std::vector<std::size_t> starved;     // components whose weight was floored
};

// Raises the smaller eigenvalues of cov to at least floor.
Cov2 floor_covariance(const Cov2& cov, double floor);

// Responsibilities, row-major: entry [t * M + j]. Rows sum to one.
std::vector<double> responsibilities(const GmmEstimate& estimate, const ObservationLog& log);

// Sum over entries of weight * ln p(point).
double log_likelihood(const GmmEstimate& estimate, const ObservationLog& log);

EmResult em_iterate(const ObservationLog& log, const GmmEstimate& estimate, std::size_t iters,
                    const EmOptions& options = {});

// One component at the weighted mean with the weighted covariance.
GmmEstimate single_component_fit(const ObservationLog& log, const EmOptions& options = {});

// 1 + V * round(f / f_mode) when f >= f_mode, else 1.
std::size_t worth_weighted_multiplicity(double f_value, double f_mode, std::size_t V);

std::size_t parameter_count(std::size_t components);
double aic(const GmmEstimate& estimate, const ObservationLog& log);
// Larger is better.
double iaic(const GmmEstimate& estimate, const ObservationLog& log);

// Probability of keeping the current model in the two-point logit over IAIC.
double keep_probability(double iaic_current, double iaic_candidate, double temperature);

// The candidate counts available from current: {M+1, M-1}, or {2} when M = 1.
std::vector<std::size_t> candidate_counts(std::size_t current);

std::pair<std::size_t, std::size_t> merge_select(const GmmEstimate& estimate, const ObservationLog& log);
double merge_score(const std::vector<double>& resp, std::size_t M, const ObservationLog& log, std::size_t j,
                   std::size_t k);

struct PartialEmOptions {
  std::size_t iterations = 50;
  EmOptions em;
};

// Replaces the pair with one component (at the lower index); other
// components keep their exact parameters.
GmmEstimate merge_components(const GmmEstimate& estimate, std::pair<std::size_t, std::size_t> pair,
                             const ObservationLog& log, const PartialEmOptions& options = {});

// Local divergence between the data claimed by component k (binned on unit
// cells) and the component density.
double split_score(const GmmEstimate& estimate, const ObservationLog& log, std::size_t k);
std::size_t split_select(const GmmEstimate& estimate, const ObservationLog& log);

// Replaces component k with two children (at k and at the end); other
// components keep their exact parameters. offset is the distance of each
// child mean from the parent along the principal axis.
GmmEstimate split_component(const GmmEstimate& estimate, std::size_t k, const ObservationLog& log, double offset,
                            Rng& rng, const PartialEmOptions& options = {});

struct ModelSelectionOptions {
  std::size_t em_iterations = 10;
  PartialEmOptions partial;
  double temperature = 0.1;
  double split_offset = 0.28;  // 0.5% of the diagonal of a 40 x 40 grid
  std::size_t max_components = 8;
};

struct ProposalOutcome {
  GmmEstimate estimate;       // the model kept
  std::size_t proposed = 0;   // candidate component count
  bool switched = false;
  double iaic_current = 0.0;
  double iaic_candidate = 0.0;
};

// One component-count proposal: build the candidate by split or merge, refine
// both models with full EM, then pick one by the IAIC logit.
ProposalOutcome propose_component_count(const GmmEstimate& current, const ObservationLog& log,
                                        const ModelSelectionOptions& options, Rng& rng);

struct SelectionRun {
  GmmEstimate estimate;
  std::size_t rounds = 0;
  std::vector<std::size_t> history;  // component count after each round
};

// Repeated proposals from a one-component start until the count has not
// changed for `patience` rounds or max_rounds is reached.
SelectionRun select_component_count(const ObservationLog& log, const ModelSelectionOptions& options, Rng& rng,
                                    std::size_t patience = 8, std::size_t max_rounds = 60);

}  // namespace gamelearn
