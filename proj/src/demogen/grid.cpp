// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/demogen/grid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <tuple>

#include "navloop/errors.hpp"

namespace navloop::demogen {

OccupancyGrid::OccupancyGrid(int width, int height, double resolution, sim::Vec2 origin)
    : width_(width), height_(height), resolution_(resolution), origin_(origin) {
  if (width <= 0 || height <= 0 || !(resolution > 0.0)) {
    throw UsageError("grid needs positive extents and resolution");
  }
  bits_.assign(static_cast<std::size_t>(width) * height, 0);
}

bool OccupancyGrid::occupied(Cell c) const {
  return bits_[static_cast<std::size_t>(c.y) * width_ + c.x] != 0;
}

void OccupancyGrid::set_occupied(Cell c, bool value) {
  bits_[static_cast<std::size_t>(c.y) * width_ + c.x] = value ? 1 : 0;
}

sim::Vec2 OccupancyGrid::center(Cell c) const {
  return {origin_.x + (c.x + 0.5) * resolution_, origin_.y + (c.y + 0.5) * resolution_};
}

Cell OccupancyGrid::cell_of(sim::Vec2 p) const {
  const int x = static_cast<int>(std::floor((p.x - origin_.x) / resolution_));
  const int y = static_cast<int>(std::floor((p.y - origin_.y) / resolution_));
  return {std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1)};
}

std::optional<Cell> OccupancyGrid::nearest_free(Cell c, int max_radius) const {
  std::optional<Cell> best;
  double best_d = std::numeric_limits<double>::infinity();
  for (int r = 0; r <= max_radius; ++r) {
    for (int dy = -r; dy <= r; ++dy) {
      for (int dx = -r; dx <= r; ++dx) {
        if (std::max(std::abs(dx), std::abs(dy)) != r) continue;
        const Cell n{c.x + dx, c.y + dy};
        if (!in_bounds(n) || occupied(n)) continue;
        const double d = std::hypot(dx, dy);
        if (d < best_d) {
          best_d = d;
          best = n;
        }
      }
    }
    // Anything on a later ring is at least r + 1 away.
    if (best && best_d <= r + 1) return best;
  }
  return best;
}

OccupancyGrid rasterize(const sim::World& world, double inflation, double resolution) {
  if (inflation < world.params().robot_radius) {
    throw UsageError("inflation must be at least the robot radius");
  }
  const sim::Bounds& b = world.bounds();
  const int w = static_cast<int>(std::ceil(b.width() / resolution - 1e-9));
  const int h = static_cast<int>(std::ceil(b.height() / resolution - 1e-9));
  OccupancyGrid grid(w, h, resolution, {b.xmin, b.ymin});
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Cell c{x, y};
      const sim::Vec2 p = grid.center(c);
      if (world.disc_collides(p, inflation) || world.point_inside_obstacle(p)) grid.set_occupied(c);
    }
  }
  return grid;
}

namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

double octile(Cell a, Cell b) {
  const int dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
  return (kSqrt2 - 1.0) * std::min(dx, dy) + std::max(dx, dy);
}

}  // namespace

std::vector<Cell> plan_astar(const OccupancyGrid& grid, Cell start, Cell goal) {
  for (const Cell c : {start, goal}) {
    if (!grid.in_bounds(c)) throw UsageError("A* endpoint off the grid");
    if (grid.occupied(c)) {
      throw UsageError("A* endpoint (" + std::to_string(c.x) + ", " + std::to_string(c.y) +
                       ") is occupied");
    }
  }
  const int w = grid.width();
  const auto index = [w](Cell c) { return static_cast<std::size_t>(c.y) * w + c.x; };
  const std::size_t n = static_cast<std::size_t>(w) * grid.height();
  std::vector<double> g(n, std::numeric_limits<double>::infinity());
  std::vector<std::int64_t> parent(n, -1);
  std::vector<std::uint8_t> closed(n, 0);

  // (f, h, insertion order, cell index); the order breaks ties deterministically.
  using Entry = std::tuple<double, double, std::uint64_t, std::size_t>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> open;
  std::uint64_t counter = 0;
  g[index(start)] = 0.0;
  open.push({octile(start, goal), octile(start, goal), counter++, index(start)});

  while (!open.empty()) {
    const auto [f, h, order, id] = open.top();
    open.pop();
    if (closed[id]) continue;
    closed[id] = 1;
    const Cell c{static_cast<int>(id % w), static_cast<int>(id / w)};
    if (c == goal) break;
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const Cell nb{c.x + dx, c.y + dy};
        if (!grid.in_bounds(nb) || grid.occupied(nb)) continue;
        const bool diagonal = dx != 0 && dy != 0;
        if (diagonal && (grid.occupied({c.x + dx, c.y}) || grid.occupied({c.x, c.y + dy}))) continue;
        const std::size_t nid = index(nb);
        if (closed[nid]) continue;
        const double cand = g[id] + (diagonal ? kSqrt2 : 1.0);
        if (cand < g[nid]) {
          g[nid] = cand;
          parent[nid] = static_cast<std::int64_t>(id);
          const double hn = octile(nb, goal);
          open.push({cand + hn, hn, counter++, nid});
        }
      }
    }
  }
  if (!closed[index(goal)]) throw UnreachableError("no path between start and goal");

  std::vector<Cell> path;
  for (std::int64_t id = static_cast<std::int64_t>(index(goal)); id >= 0; id = parent[id]) {
    path.push_back({static_cast<int>(id % w), static_cast<int>(id / w)});
  }
  std::reverse(path.begin(), path.end());
  return path;
}

double path_cost(const std::vector<Cell>& path) {
  int straight = 0, diagonal = 0;
  for (std::size_t i = 1; i < path.size(); ++i) {
    const int dx = std::abs(path[i].x - path[i - 1].x), dy = std::abs(path[i].y - path[i - 1].y);
    if (dx > 1 || dy > 1 || dx + dy == 0) throw UsageError("path cells are not adjacent");
    (dx + dy == 2 ? diagonal : straight) += 1;
  }
  return straight + diagonal * kSqrt2;
}

}  // namespace navloop::demogen
