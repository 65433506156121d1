#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace ipvem {

using Vec2 = Eigen::Vector2d;

/// 2D cross product (z-component of the 3D cross product).
inline double cross2(const Vec2& a, const Vec2& b) { return a.x() * b.y() - a.y() * b.x(); }

/// A simple polygon stored as a CCW vertex loop.
using Polygon = std::vector<Vec2>;

inline double polygon_signed_area(const Polygon& p) {
  double s = 0.0;
  const std::size_t n = p.size();
  for (std::size_t i = 0; i < n; ++i) s += cross2(p[i], p[(i + 1) % n]);
  return 0.5 * s;
}

/// Area-weighted centroid; exact for any simple polygon.
inline Vec2 polygon_centroid(const Polygon& p) {
  const std::size_t n = p.size();
  double area = 0.0;
  Vec2 c = Vec2::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = p[i];
    const Vec2& b = p[(i + 1) % n];
    const double w = cross2(a, b);
    area += w;
    c += w * (a + b);
  }
  if (std::abs(area) < 1e-300) throw std::runtime_error("polygon_centroid: degenerate polygon");
  return c / (3.0 * area);
}

inline double polygon_diameter(const Polygon& p) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) d2 = std::max(d2, (p[i] - p[j]).squaredNorm());
  return std::sqrt(d2);
}

/// Even-odd point-in-polygon test. Points on the boundary count as inside
/// up to the tolerance of the crossing computation.
inline bool point_in_polygon(const Vec2& q, const Polygon& poly) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y() > q.y()) != (b.y() > q.y())) {
      const double x = a.x() + (q.y() - a.y()) / (b.y() - a.y()) * (b.x() - a.x());
      if (q.x() < x) inside = !inside;
    }
  }
  return inside;
}

/// Clips a polygon against the half-plane { x : d.(x - m) <= 0 }.
/// Sutherland-Hodgman pass; keeps CCW orientation.
inline Polygon clip_halfplane(const Polygon& poly, const Vec2& m, const Vec2& d) {
  Polygon out;
  const std::size_t n = poly.size();
  if (n == 0) return out;
  out.reserve(n + 2);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[(i + 1) % n];
    const double sa = d.dot(a - m);
    const double sb = d.dot(b - m);
    if (sa <= 0.0) out.push_back(a);
    if ((sa < 0.0 && sb > 0.0) || (sa > 0.0 && sb < 0.0)) {
      const double t = sa / (sa - sb);
      out.push_back(a + t * (b - a));
    }
  }
  return out;
}

}  // namespace ipvem
