// Copyright 2026 The navloop Authors. Apache 2.0 License.

#include "navloop/sim/geometry.hpp"

#include <algorithm>
#include <limits>

namespace navloop::sim {

double point_segment_distance(Vec2 p, const Segment& s) {
  const Vec2 d = s.b - s.a;
  const double len2 = dot(d, d);
  double t = len2 > 0.0 ? dot(p - s.a, d) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return norm(p - (s.a + t * d));
}

bool point_in_convex(Vec2 p, const std::vector<Vec2>& poly) {
  if (poly.size() < 3) return false;
  bool pos = false, neg = false;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Vec2 a = poly[i];
    const Vec2 b = poly[(i + 1) % poly.size()];
    const double c = cross(b - a, p - a);
    if (c > 0) pos = true;
    if (c < 0) neg = true;
    if (pos && neg) return false;
  }
  return true;
}

double point_polygon_distance(Vec2 p, const std::vector<Vec2>& poly) {
  if (point_in_convex(p, poly)) return 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < poly.size(); ++i) {
    best = std::min(best, point_segment_distance(p, {poly[i], poly[(i + 1) % poly.size()]}));
  }
  return best;
}

std::optional<double> ray_segment(Vec2 origin, Vec2 dir, const Segment& s) {
  const Vec2 e = s.b - s.a;
  const double denom = cross(dir, e);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const Vec2 w = s.a - origin;
  const double t = cross(w, e) / denom;
  const double u = cross(w, dir) / denom;
  if (t < 0.0 || u < 0.0 || u > 1.0) return std::nullopt;
  return t;
}

std::optional<double> ray_circle(Vec2 origin, Vec2 dir, Vec2 center, double radius) {
  const Vec2 m = origin - center;
  const double b = dot(m, dir);
  const double c = dot(m, m) - radius * radius;
  if (c > 0.0 && b > 0.0) return std::nullopt;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  return std::max(0.0, -b - std::sqrt(disc));
}

std::optional<double> ray_polygon(Vec2 origin, Vec2 dir, const std::vector<Vec2>& poly) {
  if (point_in_convex(origin, poly)) return 0.0;
  std::optional<double> best;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const auto t = ray_segment(origin, dir, {poly[i], poly[(i + 1) % poly.size()]});
    if (t && (!best || *t < *best)) best = t;
  }
  return best;
}

std::vector<Vec2> rectangle_corners(Vec2 center, double hx, double hy, double yaw) {
  const double c = std::cos(yaw), s = std::sin(yaw);
  std::vector<Vec2> out;
  out.reserve(4);
  for (const auto& [sx, sy] : {std::pair{1.0, 1.0}, {-1.0, 1.0}, {-1.0, -1.0}, {1.0, -1.0}}) {
    const double lx = sx * hx, ly = sy * hy;
    out.push_back({center.x + c * lx - s * ly, center.y + s * lx + c * ly});
  }
  return out;
}

}  // namespace navloop::sim
