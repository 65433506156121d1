#pragma once

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "ipvem/mesh.hpp"

namespace ipvem {

struct Rect {
  double x0 = 0.0, y0 = 0.0, x1 = 1.0, y1 = 1.0;
};

inline Polygon rect_polygon(const Rect& r) {
  return {{r.x0, r.y0}, {r.x1, r.y0}, {r.x1, r.y1}, {r.x0, r.y1}};
}

inline Polygon unit_square_polygon() { return rect_polygon(Rect{}); }

/// Unit square with the closed square [1/2,1]x[1/2,1] removed.
inline Polygon l_shape_polygon() {
  return {{0.0, 0.0}, {1.0, 0.0}, {1.0, 0.5}, {0.5, 0.5}, {0.5, 1.0}, {0.0, 1.0}};
}

inline Mesh generate_rectangle_grid(int nx, int ny, const Rect& domain = Rect{}) {
  if (nx < 1 || ny < 1) throw std::invalid_argument("generate_rectangle_grid: nx, ny >= 1 required");
  if (!(domain.x1 > domain.x0) || !(domain.y1 > domain.y0)) throw std::invalid_argument("generate_rectangle_grid: degenerate rectangle");
  std::vector<Vec2> verts;
  verts.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      verts.emplace_back(domain.x0 + (domain.x1 - domain.x0) * i / nx, domain.y0 + (domain.y1 - domain.y0) * j / ny);
  std::vector<std::vector<int>> cells;
  cells.reserve(nx * ny);
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  return build_topology(std::move(verts), std::move(cells));
}

/// Uniform grid on the unit square with interior vertices moved by the smooth
/// map (x,y) -> (x,y) + delta*sin(2 pi x)sin(2 pi y)*(1,1). Boundary fixed.
inline Mesh generate_distorted_grid(int nx, int ny, double delta) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("generate_distorted_grid: nx, ny >= 2 required");
  if (delta < 0.0 || delta >= 0.25) throw std::invalid_argument("generate_distorted_grid: delta in [0, 0.25) required");
  std::vector<Vec2> verts;
  verts.reserve((nx + 1) * (ny + 1));
  constexpr double two_pi = 2.0 * std::numbers::pi;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const double x = static_cast<double>(i) / nx;
      const double y = static_cast<double>(j) / ny;
      double shift = 0.0;
      if (i > 0 && i < nx && j > 0 && j < ny) shift = delta * std::sin(two_pi * x) * std::sin(two_pi * y);
      verts.emplace_back(x + shift, y + shift);
    }
  std::vector<std::vector<int>> cells;
  cells.reserve(nx * ny);
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
  Mesh m = build_topology(std::move(verts), std::move(cells));  // throws if a cell inverted
  return m;
}

}  // namespace ipvem
