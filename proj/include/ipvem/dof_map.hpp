#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "ipvem/element.hpp"
#include "ipvem/mesh.hpp"

namespace ipvem {

/// Global DoF numbering: all vertices, then per-edge interior nodes (ordered
/// along each edge's stored direction), then per-cell moments.
struct DofMap {
  int k = 2;
  int n_vertices = 0;
  int n_edges = 0;
  int n_cells = 0;
  int moments_per_cell = 0;
  std::vector<bool> boundary;  // true for DoFs on the domain boundary

  int size() const { return n_vertices + (k - 1) * n_edges + moments_per_cell * n_cells; }
  int vertex_dof(int v) const { return v; }
  int edge_dof(int e, int node) const { return n_vertices + e * (k - 1) + node; }  // node in 0..k-2
  int moment_dof(int c, int alpha) const { return n_vertices + (k - 1) * n_edges + c * moments_per_cell + alpha; }
};

inline DofMap build_dof_map(const Mesh& mesh, int k) {
  if (k < 2) throw std::invalid_argument("build_dof_map: k >= 2 required");
  DofMap dm;
  dm.k = k;
  dm.n_vertices = mesh.num_vertices();
  dm.n_edges = mesh.num_edges();
  dm.n_cells = mesh.num_cells();
  dm.moments_per_cell = monomial_space_dim(k - 2);
  dm.boundary.assign(dm.size(), false);
  for (int v = 0; v < dm.n_vertices; ++v)
    if (mesh.vertex_on_boundary[v]) dm.boundary[dm.vertex_dof(v)] = true;
  for (int e = 0; e < dm.n_edges; ++e)
    if (mesh.edges[e].boundary)
      for (int p = 0; p < k - 1; ++p) dm.boundary[dm.edge_dof(e, p)] = true;
  return dm;
}

/// Local-to-global map matching the ElementDofLayout ordering. Edge-interior
/// nodes flip order when the cell traverses the edge against its stored
/// direction (the Gauss-Lobatto nodes are symmetric, so positions agree).
inline std::vector<int> cell_global_dofs(const Mesh& mesh, const DofMap& dm, int cell) {
  const auto& loop = mesh.cells[cell];
  const int nv = static_cast<int>(loop.size());
  const int k = dm.k;
  std::vector<int> g;
  g.reserve(nv * k + dm.moments_per_cell);
  for (int v : loop) g.push_back(dm.vertex_dof(v));
  for (int i = 0; i < nv; ++i) {
    const int e = mesh.cell_edges[cell][i];
    const bool fwd = mesh.cell_edge_forward[cell][i];
    for (int p = 0; p < k - 1; ++p) g.push_back(dm.edge_dof(e, fwd ? p : (k - 2 - p)));
  }
  for (int a = 0; a < dm.moments_per_cell; ++a) g.push_back(dm.moment_dof(cell, a));
  return g;
}

/// Coordinates of the point-valued DoFs (vertex and edge nodes); moment DoFs
/// have no point and are excluded from the returned mask.
struct DofPoints {
  std::vector<Vec2> position;   // indexed by global dof; undefined for moments
  std::vector<bool> has_point;
};

/// DoF interpolant of a smooth function: point values at vertex/edge DoFs and
/// quadrature moments for the internal DoFs. Exact on polynomials up to the
/// stated quadrature degree.
inline Eigen::VectorXd interpolate_dofs(const Mesh& mesh, const DofMap& dm, const EdgeRule& lobatto,
                                        const std::function<double(const Vec2&)>& u, int moment_exactness = -1) {
  Eigen::VectorXd chi = Eigen::VectorXd::Zero(dm.size());
  const int k = dm.k;
  for (int v = 0; v < dm.n_vertices; ++v) chi[dm.vertex_dof(v)] = u(mesh.vertices[v]);
  for (int e = 0; e < dm.n_edges; ++e) {
    const Vec2 a = mesh.vertices[mesh.edges[e].v0];
    const Vec2 b = mesh.vertices[mesh.edges[e].v1];
    for (int p = 0; p < k - 1; ++p) chi[dm.edge_dof(e, p)] = u(a + lobatto.nodes[p + 1] * (b - a));
  }
  const TriangleRule rule = triangle_rule(moment_exactness > 0 ? moment_exactness : 2 * k + 6);
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto& geom = mesh.cell_geometry[c];
    const ScaledMonomialBasis mom_basis(k - 2, geom.centroid, geom.diameter);
    const CellQuadrature q = cell_quadrature(mesh, c, rule);
    const Eigen::MatrixXd Em = mom_basis.eval(q.points);
    Eigen::VectorXd uv(q.weights.size());
    for (Eigen::Index i = 0; i < q.weights.size(); ++i) uv[i] = u(q.points[i]);
    for (int a = 0; a < dm.moments_per_cell; ++a)
      chi[dm.moment_dof(c, a)] = (q.weights.array() * Em.col(a).array() * uv.array()).sum() / geom.area;
  }
  return chi;
}

inline DofPoints dof_points(const Mesh& mesh, const DofMap& dm, const EdgeRule& lobatto) {
  DofPoints dp;
  dp.position.assign(dm.size(), Vec2::Zero());
  dp.has_point.assign(dm.size(), false);
  for (int v = 0; v < dm.n_vertices; ++v) {
    dp.position[dm.vertex_dof(v)] = mesh.vertices[v];
    dp.has_point[dm.vertex_dof(v)] = true;
  }
  for (int e = 0; e < dm.n_edges; ++e) {
    const Vec2 a = mesh.vertices[mesh.edges[e].v0];
    const Vec2 b = mesh.vertices[mesh.edges[e].v1];
    for (int p = 0; p < dm.k - 1; ++p) {
      const int dof = dm.edge_dof(e, p);
      dp.position[dof] = a + lobatto.nodes[p + 1] * (b - a);
      dp.has_point[dof] = true;
    }
  }
  return dp;
}

}  // namespace ipvem
