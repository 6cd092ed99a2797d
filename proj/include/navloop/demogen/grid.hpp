// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "navloop/sim/world.hpp"

namespace navloop::demogen {

struct Cell {
  int x = 0;
  int y = 0;
  friend bool operator==(Cell, Cell) = default;
};

class UnreachableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major occupancy bitmap over a rectangle of the world.
class OccupancyGrid {
 public:
  OccupancyGrid(int width, int height, double resolution = 0.1, sim::Vec2 origin = {});

  int width() const { return width_; }
  int height() const { return height_; }
  double resolution() const { return resolution_; }
  sim::Vec2 origin() const { return origin_; }

  bool in_bounds(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool occupied(Cell c) const;
  void set_occupied(Cell c, bool value = true);

  sim::Vec2 center(Cell c) const;
  /// Cell containing `p`, clamped onto the grid.
  Cell cell_of(sim::Vec2 p) const;
  /// Nearest free cell within `max_radius` cells (Chebyshev rings), if any.
  std::optional<Cell> nearest_free(Cell c, int max_radius) const;

 private:
  int width_;
  int height_;
  double resolution_;
  sim::Vec2 origin_;
  std::vector<std::uint8_t> bits_;
};

/// Marks every cell whose centre lies within `inflation` of a static or
/// dynamic obstacle of `world`. Throws UsageError if inflation is below the
/// robot radius.
OccupancyGrid rasterize(const sim::World& world, double inflation, double resolution = 0.1);

/// 8-connected A* with the octile heuristic. Diagonal moves may not cut
/// occupied corners. Returns both endpoints. Throws UsageError on an occupied
/// or off-grid endpoint, UnreachableError when no path exists.
std::vector<Cell> plan_astar(const OccupancyGrid& grid, Cell start, Cell goal);

/// n_straight + n_diagonal * sqrt(2) for a path of adjacent cells.
double path_cost(const std::vector<Cell>& path);

}  // namespace navloop::demogen
