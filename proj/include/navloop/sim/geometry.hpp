// Copyright 2026 The navloop Authors. Apache 2.0 License.

#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

namespace navloop::sim {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
  friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
  friend Vec2 operator*(double k, Vec2 a) { return {k * a.x, k * a.y}; }
  friend bool operator==(Vec2 a, Vec2 b) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double norm(Vec2 a) { return std::hypot(a.x, a.y); }

/// Wraps into (-pi, pi].
inline double wrap_angle(double a) {
  constexpr double kPi = std::numbers::pi;
  double r = std::remainder(a, 2.0 * kPi);
  if (r <= -kPi) r += 2.0 * kPi;
  return r;
}

struct Segment {
  Vec2 a;
  Vec2 b;
};

/// Axis-aligned world rectangle.
struct Bounds {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  bool contains(Vec2 p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

double point_segment_distance(Vec2 p, const Segment& s);

/// Convex polygon, vertices in either winding.
bool point_in_convex(Vec2 p, const std::vector<Vec2>& poly);
/// Distance from p to the polygon region (0 inside).
double point_polygon_distance(Vec2 p, const std::vector<Vec2>& poly);

/// Distance along a unit ray to the first hit, if any.
std::optional<double> ray_segment(Vec2 origin, Vec2 dir, const Segment& s);
std::optional<double> ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius);
std::optional<double> ray_polygon(Vec2 origin, Vec2 dir, const std::vector<Vec2>& poly);

/// Corners of a rectangle with half extents (hx, hy) rotated by yaw.
std::vector<Vec2> rectangle_corners(Vec2 center, double hx, double hy, double yaw);

}  // namespace navloop::sim
