#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "ipvem/mesh.hpp"
#include "ipvem/quadrature.hpp"

namespace ipvem {

struct CvtStats {
  std::vector<double> energy_history;  // one entry per Lloyd iteration (before the update)
};

namespace detail {

/// Uniform double in [0,1) from the raw generator output; avoids the
/// implementation-defined std::uniform_real_distribution.
inline double unit_uniform(std::mt19937_64& rng) { return (rng() >> 11) * 0x1.0p-53; }

inline Vec2 sample_in_polygon(std::mt19937_64& rng, const Polygon& domain, const Vec2& lo, const Vec2& hi) {
  for (int tries = 0; tries < 100000; ++tries) {
    const Vec2 p(lo.x() + (hi.x() - lo.x()) * unit_uniform(rng), lo.y() + (hi.y() - lo.y()) * unit_uniform(rng));
    if (point_in_polygon(p, domain)) return p;
  }
  throw std::runtime_error("sample_in_polygon: rejection sampling failed (degenerate domain?)");
}

/// Voronoi cell of seed i clipped to the domain: successive half-plane clips
/// against bisectors, nearest seeds first, with an early-out once the
/// remaining polygon cannot be cut. Candidates are prefiltered by a distance
/// threshold that doubles until it provably covers every relevant bisector.
inline Polygon clipped_voronoi_cell(const std::vector<Vec2>& seeds, std::size_t i, const Polygon& domain,
                                    double expected_spacing, std::vector<std::pair<double, int>>& scratch) {
  double threshold = 16.0 * expected_spacing * expected_spacing;
  for (;;) {
    scratch.clear();
    bool all_candidates = true;
    for (std::size_t j = 0; j < seeds.size(); ++j) {
      if (j == i) continue;
      const double d2 = (seeds[j] - seeds[i]).squaredNorm();
      if (d2 <= threshold) {
        scratch.emplace_back(d2, static_cast<int>(j));
      } else {
        all_candidates = false;
      }
    }
    std::sort(scratch.begin(), scratch.end());
    Polygon cell = domain;
    double max_r2 = 0.0;
    for (const Vec2& p : cell) max_r2 = std::max(max_r2, (p - seeds[i]).squaredNorm());
    bool done = all_candidates;
    for (const auto& [d2, j] : scratch) {
      if (d2 > 4.0 * max_r2) {
        done = true;  // no farther seed can cut the cell
        break;
      }
      if (d2 < 1e-28) throw std::runtime_error("clipped_voronoi_cell: coincident seeds");
      const Vec2 mid = 0.5 * (seeds[i] + seeds[j]);
      const Vec2 dir = seeds[j] - seeds[i];
      cell = clip_halfplane(cell, mid, dir);
      if (cell.size() < 3) throw std::runtime_error("clipped_voronoi_cell: degenerate cell (fewer than 3 vertices after clipping)");
      max_r2 = 0.0;
      for (const Vec2& p : cell) max_r2 = std::max(max_r2, (p - seeds[i]).squaredNorm());
    }
    if (done || 4.0 * max_r2 <= threshold) return cell;
    threshold *= 4.0;  // prefilter may have hidden a relevant seed
  }
}

/// Merges near-coincident points with a hash grid; returns the index of the
/// canonical vertex for each query.
class VertexMerger {
 public:
  explicit VertexMerger(double tol) : tol_(tol) {}

  int insert(const Vec2& p, std::vector<Vec2>& verts) {
    const std::int64_t gx = static_cast<std::int64_t>(std::floor(p.x() / tol_));
    const std::int64_t gy = static_cast<std::int64_t>(std::floor(p.y() / tol_));
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy) {
        const auto it = grid_.find(key(gx + dx, gy + dy));
        if (it == grid_.end()) continue;
        for (int idx : it->second)
          if ((verts[idx] - p).norm() <= tol_) return idx;
      }
    const int idx = static_cast<int>(verts.size());
    verts.push_back(p);
    grid_[key(gx, gy)].push_back(idx);
    return idx;
  }

 private:
  static std::uint64_t key(std::int64_t x, std::int64_t y) {
    return static_cast<std::uint64_t>(x) * 0x9e3779b97f4a7c15ULL ^ static_cast<std::uint64_t>(y);
  }
  double tol_;
  std::unordered_map<std::uint64_t, std::vector<int>> grid_;
};

}  // namespace detail

/// CVT energy of a seed set: sum over cells of the second moment about the seed.
inline double cvt_energy(const std::vector<Polygon>& cells, const std::vector<Vec2>& seeds) {
  static const TriangleRule rule = triangle_rule(2);
  double e = 0.0;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const Polygon& c = cells[i];
    for (std::size_t t = 1; t + 1 < c.size(); ++t)
      e += integrate_triangle(rule, c[0], c[t], c[t + 1],
                              [&](const Vec2& x) { return (x - seeds[i]).squaredNorm(); });
  }
  return e;
}

/// Centroidal Voronoi tessellation of a polygonal domain: seeded random
/// points, then lloyd_iters iterations of moving every seed to the centroid
/// of its clipped Voronoi cell. Deterministic for a fixed seed.
inline Mesh generate_cvt_polygonal(int n_cells, const Polygon& domain, std::uint64_t rng_seed, int lloyd_iters,
                                   CvtStats* stats = nullptr) {
  if (n_cells < 2) throw std::invalid_argument("generate_cvt_polygonal: n_cells >= 2 required");
  if (domain.size() < 3) throw std::invalid_argument("generate_cvt_polygonal: domain polygon required");
  Vec2 lo = domain[0], hi = domain[0];
  for (const Vec2& p : domain) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  std::mt19937_64 rng(rng_seed);
  std::vector<Vec2> seeds;
  seeds.reserve(n_cells);
  for (int i = 0; i < n_cells; ++i) seeds.push_back(detail::sample_in_polygon(rng, domain, lo, hi));

  std::vector<Polygon> cells(n_cells);
  std::vector<std::pair<double, int>> scratch;
  const double spacing = std::sqrt(std::abs(polygon_signed_area(domain)) / n_cells);
  for (int it = 0; it < lloyd_iters; ++it) {
    for (int i = 0; i < n_cells; ++i) cells[i] = detail::clipped_voronoi_cell(seeds, i, domain, spacing, scratch);
    if (stats) stats->energy_history.push_back(cvt_energy(cells, seeds));
    for (int i = 0; i < n_cells; ++i) seeds[i] = polygon_centroid(cells[i]);
  }
  for (int i = 0; i < n_cells; ++i) cells[i] = detail::clipped_voronoi_cell(seeds, i, domain, spacing, scratch);
  if (stats) stats->energy_history.push_back(cvt_energy(cells, seeds));

  // Weld shared vertices; Voronoi cells computed independently agree only up
  // to round-off at common corners.
  const double tol = 1e-9 * (hi - lo).norm();
  std::vector<Vec2> verts;
  detail::VertexMerger merger(tol);
  std::vector<std::vector<int>> loops(n_cells);
  for (int i = 0; i < n_cells; ++i) {
    std::vector<int>& loop = loops[i];
    for (const Vec2& p : cells[i]) {
      const int id = merger.insert(p, verts);
      if (loop.empty() || loop.back() != id) loop.push_back(id);
    }
    while (loop.size() > 1 && loop.front() == loop.back()) loop.pop_back();
    if (loop.size() < 3) throw std::runtime_error("generate_cvt_polygonal: degenerate cell after vertex welding");
  }
  return build_topology(std::move(verts), std::move(loops));
}

}  // namespace ipvem
