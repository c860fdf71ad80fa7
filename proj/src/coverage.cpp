#include "gamelearn/coverage.hpp"

#include <cmath>

#include "gamelearn/error.hpp"

namespace gamelearn {

void CoverageParams::validate() const {
  if (!(delta > 0.0)) throw InvalidArgument("covering range delta must be positive");
  if (!(motion_radius >= 1.0)) throw InvalidArgument("motion radius must reach the adjacent cells");
  if (!(K > 0.0)) throw InvalidArgument("energy coefficient K must be positive");
}

CoverageWorld::CoverageWorld(WorthField field, std::vector<std::size_t> positions, CoverageParams params)
    : field_(std::move(field)), params_(params), positions_(std::move(positions)) {
  params_.validate();
  if (field_.side() == 0) throw InvalidArgument("world needs a non-empty grid");
  for (std::size_t p : positions_) {
    if (p >= cell_count()) throw InvalidArgument("robot position outside the grid");
  }
  previous_ = positions_;
  flags_.assign(positions_.size(), std::vector<char>(cell_count(), 0));
  flag_counts_.assign(positions_.size(), 0);
  moves_.resize(cell_count());
  sensed_.resize(cell_count());
  for (std::size_t c = 0; c < cell_count(); ++c) {
    moves_[c] = neighbor_cells(c, params_.motion_radius);
    sensed_[c] = neighbor_cells(c, params_.delta);
  }
}

double CoverageWorld::distance(std::size_t a, std::size_t b) const {
  const std::size_t L = side();
  const double dx = static_cast<double>(a % L) - static_cast<double>(b % L);
  const double dy = static_cast<double>(a / L) - static_cast<double>(b / L);
  return std::hypot(dx, dy);
}

std::vector<std::size_t> CoverageWorld::neighbor_cells(std::size_t cell, double radius) const {
  if (cell >= cell_count()) throw InvalidArgument("cell outside the grid");
  const long L = static_cast<long>(side());
  const long cx = static_cast<long>(cell) % L, cy = static_cast<long>(cell) / L;
  const long r = static_cast<long>(std::floor(radius));
  std::vector<std::size_t> out;
  for (long y = std::max(0L, cy - r); y <= std::min(L - 1, cy + r); ++y) {
    for (long x = std::max(0L, cx - r); x <= std::min(L - 1, cx + r); ++x) {
      const double d = std::hypot(static_cast<double>(x - cx), static_cast<double>(y - cy));
      if (d <= radius + 1e-12) out.push_back(static_cast<std::size_t>(y * L + x));
    }
  }
  return out;
}

double CoverageWorld::covered_at(std::span<const double> raster, std::size_t cell) const {
  double s = 0.0;
  for (std::size_t l : sensed_[cell]) s += raster[l];
  return s;
}

double CoverageWorld::covered_worth(std::size_t robot) const {
  return covered_at(field_.raster(), positions_.at(robot));
}

double CoverageWorld::overlap_at(std::span<const double> raster, std::size_t robot, std::size_t cell) const {
  double s = 0.0;
  const double reach = 2.0 * params_.delta + 1e-12;
  for (std::size_t j = 0; j < positions_.size(); ++j) {
    if (j == robot) continue;
    const std::size_t other = positions_[j];
    if (distance(cell, other) > reach) continue;
    for (std::size_t l : sensed_[cell]) {
      if (distance(l, other) <= params_.delta + 1e-12) s += raster[l];
    }
  }
  return s;
}

double CoverageWorld::overlap_worth(std::size_t robot) const {
  return overlap_at(field_.raster(), robot, positions_.at(robot));
}

double CoverageWorld::total_covered() const {
  double s = 0.0;
  for (std::size_t i = 0; i < positions_.size(); ++i) s += covered_worth(i);
  return s;
}

bool CoverageWorld::flag_blocked(std::size_t robot, std::size_t new_cell, std::size_t old_cell) const {
  if (distance(new_cell, old_cell) > params_.flag_range() + 1e-12) return false;
  for (std::size_t j = 0; j < flags_.size(); ++j) {
    if (j != robot && flags_[j][new_cell]) return true;
  }
  return false;
}

double CoverageWorld::utility_with(std::span<const double> raster, std::size_t robot, std::size_t new_cell,
                                   std::size_t old_cell) const {
  if (robot >= robot_count()) throw InvalidArgument("robot index out of range");
  if (new_cell >= cell_count() || old_cell >= cell_count()) throw InvalidArgument("cell outside the grid");
  if (raster.size() != cell_count()) throw InvalidArgument("raster size does not match the grid");
  const double move_cost = params_.K * distance(new_cell, old_cell);
  if (flag_blocked(robot, new_cell, old_cell)) return -move_cost;
  return covered_at(raster, new_cell) - overlap_at(raster, robot, new_cell) - move_cost;
}

double CoverageWorld::utility(std::size_t robot, std::size_t new_cell, std::size_t old_cell) const {
  return utility_with(field_.raster(), robot, new_cell, old_cell);
}

double CoverageWorld::potential(std::span<const std::size_t> joint_new, std::span<const std::size_t> joint_old) const {
  if (joint_new.size() != robot_count() || joint_old.size() != robot_count()) {
    throw InvalidArgument("joint actions need one cell per robot");
  }
  double phi = 0.0;
  for (std::size_t i = 0; i < robot_count(); ++i) phi += utility(i, joint_new[i], joint_old[i]);
  return phi;
}

void CoverageWorld::set_positions(std::span<const std::size_t> next) {
  if (next.size() != robot_count()) throw InvalidArgument("need one cell per robot");
  for (std::size_t p : next) {
    if (p >= cell_count()) throw InvalidArgument("robot position outside the grid");
  }
  previous_ = positions_;
  positions_.assign(next.begin(), next.end());
}

bool CoverageWorld::lay_flag(std::size_t robot) {
  char& f = flags_.at(robot)[positions_[robot]];
  if (f) return false;
  f = 1;
  ++flag_counts_[robot];
  return true;
}

void CoverageWorld::set_flag(std::size_t robot, std::size_t cell) {
  char& f = flags_.at(robot).at(cell);
  if (!f) {
    f = 1;
    ++flag_counts_[robot];
  }
}

ConstrainedActionMap CoverageWorld::constraint_map() const {
  return ConstrainedActionMap(std::vector<std::vector<std::vector<std::size_t>>>(robot_count(), moves_));
}

Game CoverageWorld::as_game(std::vector<std::span<const double>> rasters) const {
  if (rasters.size() != robot_count()) throw InvalidArgument("need one raster per robot");
  std::vector<std::size_t> counts(robot_count(), cell_count());
  return Game::from_function(std::move(counts),
                             [this, rasters = std::move(rasters)](std::size_t i, std::span<const std::size_t> joint) {
                               return utility_with(rasters[i], i, joint[i], positions_[i]);
                             });
}

Game CoverageWorld::as_game() const {
  return as_game(std::vector<std::span<const double>>(robot_count(), std::span<const double>(field_.raster())));
}

}  // namespace gamelearn
