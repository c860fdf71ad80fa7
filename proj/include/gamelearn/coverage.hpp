#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "gamelearn/game.hpp"
#include "gamelearn/loglinear.hpp"
#include "gamelearn/worth_field.hpp"

namespace gamelearn {

struct CoverageParams {
  double delta = 1.5;          // sensing (covering) radius
  double motion_radius = 1.5;  // one step reaches the 8 neighbours and the cell itself
  double K = 3e-5;             // energy cost per unit of distance moved

  double flag_range() const { return 2.0 * delta; }
  void validate() const;
};

// Grid world for the coverage game. Robot actions are cell indices. Decisions
// within one iteration read the world as it was before the iteration: other
// robots' positions and all flags are fixed context, so a robot's utility
// depends only on its own (new, old) cells.
class CoverageWorld {
 public:
  CoverageWorld(WorthField field, std::vector<std::size_t> positions, CoverageParams params = {});

  const WorthField& field() const { return field_; }
  const CoverageParams& params() const { return params_; }
  std::size_t side() const { return field_.side(); }
  std::size_t cell_count() const { return field_.cell_count(); }
  std::size_t robot_count() const { return positions_.size(); }

  const std::vector<std::size_t>& positions() const { return positions_; }
  const std::vector<std::size_t>& previous() const { return previous_; }

  double distance(std::size_t a, std::size_t b) const;
  std::vector<std::size_t> neighbor_cells(std::size_t cell, double radius) const;
  // Moore neighbourhood plus the cell itself (precomputed).
  const std::vector<std::size_t>& constrained_moves(std::size_t cell) const { return moves_[cell]; }
  // Cells within delta (precomputed).
  const std::vector<std::size_t>& sensed_cells(std::size_t cell) const { return sensed_[cell]; }

  // Worth inside the delta-ball around cell, using the given raster.
  double covered_at(std::span<const double> raster, std::size_t cell) const;
  double covered_worth(std::size_t robot) const;
  // Sum over other robots j of the worth in the intersection of the balls
  // around cell and around robot j's current position.
  double overlap_at(std::span<const double> raster, std::size_t robot, std::size_t cell) const;
  double overlap_worth(std::size_t robot) const;
  double total_covered() const;

  // True when some other robot's flag sits on new_cell and new_cell is within
  // the flag range of old_cell.
  bool flag_blocked(std::size_t robot, std::size_t new_cell, std::size_t old_cell) const;

  double utility(std::size_t robot, std::size_t new_cell, std::size_t old_cell) const;
  double utility_with(std::span<const double> raster, std::size_t robot, std::size_t new_cell,
                      std::size_t old_cell) const;
  double potential(std::span<const std::size_t> joint_new, std::span<const std::size_t> joint_old) const;

  // Moves every robot at once; the old positions become previous().
  void set_positions(std::span<const std::size_t> next);
  // Returns true when the flag is new.
  bool lay_flag(std::size_t robot);
  bool has_flag(std::size_t robot, std::size_t cell) const { return flags_[robot][cell] != 0; }
  std::size_t flag_count(std::size_t robot) const { return flag_counts_[robot]; }
  void set_flag(std::size_t robot, std::size_t cell);

  ConstrainedActionMap constraint_map() const;
  // The one-shot game in which each robot picks its next cell; utilities are
  // evaluated against the current world with the robot's own raster.
  Game as_game(std::vector<std::span<const double>> rasters) const;
  Game as_game() const;

 private:
  WorthField field_;
  CoverageParams params_;
  std::vector<std::size_t> positions_;
  std::vector<std::size_t> previous_;
  std::vector<std::vector<char>> flags_;
  std::vector<std::size_t> flag_counts_;
  std::vector<std::vector<std::size_t>> moves_;
  std::vector<std::vector<std::size_t>> sensed_;
};

}  // namespace gamelearn
