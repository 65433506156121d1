#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipvem/geometry.hpp"

namespace ipvem {

struct Edge {
  int v0 = -1;            // direction (v0 -> v1) as traversed by cell_minus
  int v1 = -1;
  int cell_minus = -1;    // lower-indexed adjacent cell
  int cell_plus = -1;     // higher-indexed adjacent cell, -1 on the boundary
  bool boundary = false;
  double length = 0.0;
  Vec2 tangent = Vec2::Zero();  // unit, along (v0 -> v1)
  Vec2 normal = Vec2::Zero();   // unit, out of cell_minus (outward on the boundary)
};

struct CellGeometry {
  Vec2 centroid = Vec2::Zero();
  double diameter = 0.0;
  double area = 0.0;
  int fan_apex = 0;                        // loop position of the fan apex
  std::vector<std::array<int, 3>> fan;     // global vertex-index triples
};

struct MeshQualityReport {
  std::vector<double> min_fan_angle_deg;   // per cell
  std::vector<double> max_edge_ratio;      // per cell
  std::vector<int> violating_cells;
  double min_angle_threshold_deg = 10.0;
  double max_ratio_threshold = 50.0;
};

class Mesh {
 public:
  std::vector<Vec2> vertices;
  std::vector<std::vector<int>> cells;          // CCW vertex loops
  std::vector<Edge> edges;
  std::vector<CellGeometry> cell_geometry;
  std::vector<std::vector<int>> cell_edges;     // edge id per cell loop position
  std::vector<std::vector<bool>> cell_edge_forward;  // cell traverses edge along stored direction
  std::vector<bool> vertex_on_boundary;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_cells() const { return static_cast<int>(cells.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  double max_diameter() const {
    double h = 0.0;
    for (const auto& g : cell_geometry) h = std::max(h, g.diameter);
    return h;
  }

  double total_area() const {
    double a = 0.0;
    for (const auto& g : cell_geometry) a += g.area;
    return a;
  }

  Polygon cell_polygon(int c) const {
    Polygon p;
    p.reserve(cells[c].size());
    for (int v : cells[c]) p.push_back(vertices[v]);
    return p;
  }
};

namespace detail {

/// Picks the fan apex maximizing the minimal signed triangle area, so fans on
/// mildly non-convex cells stay positively oriented whenever possible.
inline int best_fan_apex(const Polygon& poly) {
  const int n = static_cast<int>(poly.size());
  if (n == 3) return 0;
  int best = 0;
  double best_min = -std::numeric_limits<double>::infinity();
  for (int a = 0; a < n; ++a) {
    double mn = std::numeric_limits<double>::infinity();
    for (int i = 1; i + 1 < n; ++i) {
      const Vec2& p0 = poly[a];
      const Vec2& p1 = poly[(a + i) % n];
      const Vec2& p2 = poly[(a + i + 1) % n];
      mn = std::min(mn, 0.5 * cross2(p1 - p0, p2 - p0));
    }
    if (mn > best_min) {
      best_min = mn;
      best = a;
    }
  }
  return best;
}

}  // namespace detail

/// Builds the full mesh (edges, orientation, geometry) from raw vertex and
/// cell data. Throws on clockwise cells, dangling indices and non-manifold
/// edges.
inline Mesh build_topology(std::vector<Vec2> vertices, std::vector<std::vector<int>> cells) {
  Mesh m;
  m.vertices = std::move(vertices);
  m.cells = std::move(cells);
  const int nv = m.num_vertices();
  const int nc = m.num_cells();

  for (int c = 0; c < nc; ++c) {
    const auto& loop = m.cells[c];
    if (loop.size() < 3) throw std::runtime_error("build_topology: cell " + std::to_string(c) + " has fewer than 3 vertices");
    for (int v : loop)
      if (v < 0 || v >= nv) throw std::runtime_error("build_topology: cell " + std::to_string(c) + " references vertex index out of range");
  }

  // Edge identification keyed by the sorted vertex pair.
  std::map<std::pair<int, int>, int> edge_of;
  m.cell_edges.assign(nc, {});
  m.cell_edge_forward.assign(nc, {});
  for (int c = 0; c < nc; ++c) {
    const auto& loop = m.cells[c];
    const int n = static_cast<int>(loop.size());
    m.cell_edges[c].resize(n);
    m.cell_edge_forward[c].resize(n);
    for (int i = 0; i < n; ++i) {
      const int a = loop[i];
      const int b = loop[(i + 1) % n];
      if (a == b) throw std::runtime_error("build_topology: zero-length edge in cell " + std::to_string(c));
      const auto key = std::minmax(a, b);
      auto it = edge_of.find(key);
      if (it == edge_of.end()) {
        Edge e;
        e.v0 = a;
        e.v1 = b;
        e.cell_minus = c;
        const int id = static_cast<int>(m.edges.size());
        m.edges.push_back(e);
        edge_of.emplace(key, id);
        m.cell_edges[c][i] = id;
        m.cell_edge_forward[c][i] = true;
      } else {
        Edge& e = m.edges[it->second];
        if (e.cell_plus >= 0) throw std::runtime_error("build_topology: non-manifold edge (shared by more than two cells)");
        if (e.v0 == a && e.v1 == b) throw std::runtime_error("build_topology: inconsistent cell orientation at a shared edge");
        e.cell_plus = c;
        m.cell_edges[c][i] = it->second;
        m.cell_edge_forward[c][i] = false;
      }
    }
  }

  for (auto& e : m.edges) {
    e.boundary = (e.cell_plus < 0);
    const Vec2 t = m.vertices[e.v1] - m.vertices[e.v0];
    e.length = t.norm();
    e.tangent = t / e.length;
    e.normal = Vec2(e.tangent.y(), -e.tangent.x());
  }

  m.vertex_on_boundary.assign(nv, false);
  for (const auto& e : m.edges)
    if (e.boundary) {
      m.vertex_on_boundary[e.v0] = true;
      m.vertex_on_boundary[e.v1] = true;
    }

  // Per-cell geometry; signed fans stay exact for polynomial integration even
  // on non-convex cells.
  m.cell_geometry.resize(nc);
  for (int c = 0; c < nc; ++c) {
    const Polygon poly = m.cell_polygon(c);
    const double area = polygon_signed_area(poly);
    if (!(area > 0.0)) throw std::runtime_error("build_topology: cell " + std::to_string(c) + " is not counter-clockwise (signed area <= 0)");
    CellGeometry g;
    g.area = area;
    g.centroid = polygon_centroid(poly);
    g.diameter = polygon_diameter(poly);
    g.fan_apex = detail::best_fan_apex(poly);
    const int n = static_cast<int>(poly.size());
    for (int i = 1; i + 1 < n; ++i)
      g.fan.push_back({m.cells[c][g.fan_apex], m.cells[c][(g.fan_apex + i) % n], m.cells[c][(g.fan_apex + i + 1) % n]});
    m.cell_geometry[c] = g;
  }
  return m;
}

inline MeshQualityReport mesh_quality(const Mesh& m, double min_angle_deg = 10.0, double max_ratio = 50.0) {
  MeshQualityReport r;
  r.min_angle_threshold_deg = min_angle_deg;
  r.max_ratio_threshold = max_ratio;
  for (int c = 0; c < m.num_cells(); ++c) {
    double min_angle = 180.0;
    for (const auto& tri : m.cell_geometry[c].fan) {
      const Vec2 a = m.vertices[tri[0]], b = m.vertices[tri[1]], d = m.vertices[tri[2]];
      const std::array<Vec2, 3> p{a, b, d};
      for (int i = 0; i < 3; ++i) {
        const Vec2 u = p[(i + 1) % 3] - p[i];
        const Vec2 v = p[(i + 2) % 3] - p[i];
        const double ang = std::atan2(std::abs(cross2(u, v)), u.dot(v)) * 180.0 / std::numbers::pi;
        min_angle = std::min(min_angle, ang);
      }
    }
    double lmin = std::numeric_limits<double>::infinity(), lmax = 0.0;
    const auto& loop = m.cells[c];
    for (std::size_t i = 0; i < loop.size(); ++i) {
      const double l = (m.vertices[loop[(i + 1) % loop.size()]] - m.vertices[loop[i]]).norm();
      lmin = std::min(lmin, l);
      lmax = std::max(lmax, l);
    }
    r.min_fan_angle_deg.push_back(min_angle);
    r.max_edge_ratio.push_back(lmax / lmin);
    if (min_angle < min_angle_deg || lmax / lmin > max_ratio) r.violating_cells.push_back(c);
  }
  return r;
}

}  // namespace ipvem
