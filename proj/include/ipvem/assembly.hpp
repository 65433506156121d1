#pragma once

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipvem/dof_map.hpp"
#include "ipvem/element.hpp"
#include "ipvem/mesh.hpp"
#include "ipvem/parallel.hpp"

namespace ipvem {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

/// Interior-penalty configuration. lambda multiplies the jump penalty J1;
/// edge_nodes = 0 selects the default k-point Gauss rule (exact to 2k-2 for
/// the projected integrands).
struct PenaltyConfig {
  double lambda = 1.0;
  int edge_nodes = 0;
  bool include_boundary_edges = true;
};

/// Essential trace data u = g_D (imposed through the boundary DoFs) and weak
/// normal-derivative data du/dn = g_N (imposed through the penalty terms).
/// g_N receives the evaluation point and the outward unit normal.
struct BoundaryData {
  std::function<double(const Vec2&)> g_D;  // nullptr means zero
  std::function<double(const Vec2&, const Vec2&)> g_N;
};

struct LinearSystem {
  SpMat A;
  Eigen::VectorXd rhs;
};

/// Per-cell element operators for a whole mesh; cells are independent, so the
/// construction runs in parallel with bitwise-deterministic results.
inline std::vector<ElementOperators> build_all_element_operators(const Mesh& mesh, const ElementRules& rules,
                                                                 const ElementOptions& opts,
                                                                 const std::function<double(const Vec2&)>& f = nullptr,
                                                                 int threads = 1) {
  std::vector<ElementOperators> ops(mesh.num_cells());
  parallel_for(mesh.num_cells(), threads, [&](int c) {
    ops[c] = build_element_operators(mesh, c, rules, opts, f);
  });
  return ops;
}

/// Scatters eps^2 * A_loc + B_loc and the local loads into global triplets.
inline void assemble_volume(const Mesh& mesh, const DofMap& dm, const std::vector<ElementOperators>& ops,
                            double epsilon, std::vector<Triplet>& triplets, Eigen::VectorXd& rhs) {
  const double eps2 = epsilon * epsilon;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_global_dofs(mesh, dm, c);
    const Eigen::MatrixXd K = eps2 * ops[c].A_loc + ops[c].B_loc;
    const int n = static_cast<int>(g.size());
    for (int i = 0; i < n; ++i) {
      rhs[g[i]] += ops[c].F_loc[i];
      for (int j = 0; j < n; ++j) triplets.emplace_back(g[i], g[j], K(i, j));
    }
  }
}

namespace detail {

struct PenaltySide {
  int cell = -1;
  Eigen::MatrixXd dn;   // (quad points) x (local dofs): d(Pi_nabla .)/dn_e
  Eigen::MatrixXd dnn;  // second normal derivative of the projection
  std::vector<int> gdofs;
};

inline PenaltySide penalty_side(const Mesh& mesh, const DofMap& dm, const ElementOperators& ops, int cell,
                                const std::vector<Vec2>& qpts, const Vec2& n_e) {
  PenaltySide s;
  s.cell = cell;
  const auto& basis = ops.basis;
  const Eigen::MatrixXd Gx = basis.eval(qpts, 1, 0);
  const Eigen::MatrixXd Gy = basis.eval(qpts, 0, 1);
  const Eigen::MatrixXd Hxx = basis.eval(qpts, 2, 0);
  const Eigen::MatrixXd Hxy = basis.eval(qpts, 1, 1);
  const Eigen::MatrixXd Hyy = basis.eval(qpts, 0, 2);
  const double nx = n_e.x(), ny = n_e.y();
  s.dn = (nx * Gx + ny * Gy) * ops.P_nabla;
  s.dnn = (nx * nx * Hxx + 2.0 * nx * ny * Hxy + ny * ny * Hyy) * ops.P_nabla;
  s.gdofs = cell_global_dofs(mesh, dm, cell);
  return s;
}

}  // namespace detail

/// Assembles eps^2 (J1 + J2 + J3) over the edges, built from the elementwise
/// H1 projections of both neighbours; jumps use [v] = v^- - v^+ with n_e
/// pointing from the lower- to the higher-indexed cell. Nonzero g_N adds the
/// Nitsche lifting terms on boundary edges.
inline void assemble_penalty(const Mesh& mesh, const DofMap& dm, const std::vector<ElementOperators>& ops,
                             double epsilon, const PenaltyConfig& config, const BoundaryData& bdata,
                             std::vector<Triplet>& triplets, Eigen::VectorXd& rhs) {
  const double eps2 = epsilon * epsilon;
  const int nq = config.edge_nodes > 0 ? config.edge_nodes : dm.k;
  const EdgeRule rule = gauss_legendre(nq);
  std::vector<int> combined;
  std::vector<double> jump_row, avg_row;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edges[e];
    if (edge.boundary && !config.include_boundary_edges) continue;
    std::vector<Vec2> qpts(nq);
    const Vec2 a = mesh.vertices[edge.v0], b = mesh.vertices[edge.v1];
    for (int q = 0; q < nq; ++q) qpts[q] = a + rule.nodes[q] * (b - a);

    const detail::PenaltySide sm = detail::penalty_side(mesh, dm, ops[edge.cell_minus], edge.cell_minus, qpts, edge.normal);
    detail::PenaltySide sp;
    if (!edge.boundary) sp = detail::penalty_side(mesh, dm, ops[edge.cell_plus], edge.cell_plus, qpts, edge.normal);

    combined.clear();
    combined.insert(combined.end(), sm.gdofs.begin(), sm.gdofs.end());
    std::vector<int> plus_pos;
    if (!edge.boundary) {
      plus_pos.resize(sp.gdofs.size());
      for (std::size_t j = 0; j < sp.gdofs.size(); ++j) {
        const auto it = std::find(sm.gdofs.begin(), sm.gdofs.end(), sp.gdofs[j]);
        if (it != sm.gdofs.end()) {
          plus_pos[j] = static_cast<int>(it - sm.gdofs.begin());
        } else {
          plus_pos[j] = static_cast<int>(combined.size());
          combined.push_back(sp.gdofs[j]);
        }
      }
    }
    const int nc = static_cast<int>(combined.size());
    Eigen::MatrixXd Me = Eigen::MatrixXd::Zero(nc, nc);
    Eigen::VectorXd be = Eigen::VectorXd::Zero(nc);
    jump_row.assign(nc, 0.0);
    avg_row.assign(nc, 0.0);
    const double avg_factor = edge.boundary ? 1.0 : 0.5;
    for (int q = 0; q < nq; ++q) {
      std::fill(jump_row.begin(), jump_row.end(), 0.0);
      std::fill(avg_row.begin(), avg_row.end(), 0.0);
      for (int j = 0; j < static_cast<int>(sm.gdofs.size()); ++j) {
        jump_row[j] += sm.dn(q, j);
        avg_row[j] += avg_factor * sm.dnn(q, j);
      }
      if (!edge.boundary)
        for (int j = 0; j < static_cast<int>(sp.gdofs.size()); ++j) {
          jump_row[plus_pos[j]] -= sp.dn(q, j);
          avg_row[plus_pos[j]] += avg_factor * sp.dnn(q, j);
        }
      const double w = edge.length * rule.weights[q];
      for (int i = 0; i < nc; ++i)
        for (int j = 0; j < nc; ++j)
          Me(i, j) += w * (config.lambda / edge.length * jump_row[i] * jump_row[j] -
                           avg_row[i] * jump_row[j] - jump_row[i] * avg_row[j]);
      if (edge.boundary && bdata.g_N) {
        const double gn = bdata.g_N(qpts[q], edge.normal);
        for (int i = 0; i < nc; ++i)
          be[i] += w * gn * (config.lambda / edge.length * jump_row[i] - avg_row[i]);
      }
    }
    for (int i = 0; i < nc; ++i) {
      rhs[combined[i]] += eps2 * be[i];
      for (int j = 0; j < nc; ++j) triplets.emplace_back(combined[i], combined[j], eps2 * Me(i, j));
    }
  }
}

/// Full system eps^2 (a_h + J1 + J2 + J3) + b_h with the load and the g_N
/// lifting on the right-hand side.
inline LinearSystem assemble_system(const Mesh& mesh, const DofMap& dm, const std::vector<ElementOperators>& ops,
                                    double epsilon, const PenaltyConfig& config, const BoundaryData& bdata) {
  LinearSystem sys;
  const int n = dm.size();
  sys.rhs = Eigen::VectorXd::Zero(n);
  std::vector<Triplet> triplets;
  assemble_volume(mesh, dm, ops, epsilon, triplets, sys.rhs);
  assemble_penalty(mesh, dm, ops, epsilon, config, bdata, triplets, sys.rhs);
  sys.A.resize(n, n);
  sys.A.setFromTriplets(triplets.begin(), triplets.end());
  sys.A.makeCompressed();
  return sys;
}

/// Homogeneous-by-default reduction: boundary DoFs are fixed to g_D values,
/// their columns move to the right-hand side.
struct ReducedSystem {
  SpMat A;                      // free-free block
  Eigen::VectorXd rhs;          // reduced right-hand side
  std::vector<int> free_dofs;   // free index -> full index
  Eigen::VectorXd full_values;  // boundary entries prefilled, free entries zero
};

inline ReducedSystem apply_boundary_conditions(const LinearSystem& sys, const Mesh& mesh, const DofMap& dm,
                                               const BoundaryData& bdata, const EdgeRule& lobatto) {
  const int n = dm.size();
  ReducedSystem red;
  red.full_values = Eigen::VectorXd::Zero(n);
  std::vector<int> full_to_free(n, -1);
  if (bdata.g_D) {
    const DofPoints dp = dof_points(mesh, dm, lobatto);
    for (int i = 0; i < n; ++i)
      if (dm.boundary[i]) {
        if (!dp.has_point[i]) throw std::runtime_error("apply_boundary_conditions: boundary DoF without a point");
        red.full_values[i] = bdata.g_D(dp.position[i]);
      }
  }
  for (int i = 0; i < n; ++i)
    if (!dm.boundary[i]) {
      full_to_free[i] = static_cast<int>(red.free_dofs.size());
      red.free_dofs.push_back(i);
    }
  const int nf = static_cast<int>(red.free_dofs.size());
  red.rhs.resize(nf);
  for (int i = 0; i < nf; ++i) red.rhs[i] = sys.rhs[red.free_dofs[i]];
  std::vector<Triplet> triplets;
  for (int col = 0; col < sys.A.outerSize(); ++col)
    for (SpMat::InnerIterator it(sys.A, col); it; ++it) {
      const int i = static_cast<int>(it.row());
      const int j = static_cast<int>(it.col());
      if (dm.boundary[i]) continue;
      if (dm.boundary[j]) {
        if (red.full_values[j] != 0.0) red.rhs[full_to_free[i]] -= it.value() * red.full_values[j];
      } else {
        triplets.emplace_back(full_to_free[i], full_to_free[j], it.value());
      }
    }
  red.A.resize(nf, nf);
  red.A.setFromTriplets(triplets.begin(), triplets.end());
  red.A.makeCompressed();
  return red;
}

enum class SolveMethod { Direct, ConjugateGradient };

struct SolveOptions {
  SolveMethod method = SolveMethod::Direct;
  double tol = 1e-12;
  int max_iterations = 20000;
  double lambda_hint = 1.0;  // echoed in the non-PD diagnostic
};

/// Solves the reduced system and returns the full coefficient vector with the
/// boundary values filled in.
inline Eigen::VectorXd solve(const ReducedSystem& red, const SolveOptions& opts = {}) {
  Eigen::VectorXd x;
  const double bnorm = red.rhs.norm();
  if (opts.method == SolveMethod::Direct) {
    Eigen::SimplicialLDLT<SpMat> ldlt;
    ldlt.compute(red.A);
    if (ldlt.info() != Eigen::Success || (red.A.rows() > 0 && ldlt.vectorD().minCoeff() <= 0.0))
      throw std::runtime_error(
          "solve: factorization failed, matrix is not positive definite; "
          "raise the penalty parameter lambda (current lambda = " +
          std::to_string(opts.lambda_hint) + ")");
    x = ldlt.solve(red.rhs);
    for (int refine = 0; refine < 3; ++refine) {
      const Eigen::VectorXd r = red.rhs - red.A * x;
      if (bnorm == 0.0 || r.norm() <= opts.tol * bnorm) break;
      x += ldlt.solve(r);
    }
  } else {
    Eigen::ConjugateGradient<SpMat, Eigen::Lower | Eigen::Upper> cg;
    cg.setTolerance(opts.tol);
    cg.setMaxIterations(opts.max_iterations);
    cg.compute(red.A);
    x = cg.solve(red.rhs);
    if (cg.info() != Eigen::Success) throw std::runtime_error("solve: conjugate gradients did not converge");
  }
  if (bnorm > 0.0) {
    const double rel = (red.rhs - red.A * x).norm() / bnorm;
    if (!(rel <= std::max(opts.tol, 1e-10) * 100.0))
      throw std::runtime_error("solve: relative residual " + std::to_string(rel) + " above tolerance");
  }
  Eigen::VectorXd full = red.full_values;
  for (std::size_t i = 0; i < red.free_dofs.size(); ++i) full[red.free_dofs[i]] = x[static_cast<Eigen::Index>(i)];
  return full;
}

/// Largest relative asymmetry max|A - A^T| / max|A|.
inline double relative_asymmetry(const SpMat& A) {
  const SpMat At = SpMat(A.transpose());
  double num = 0.0, den = 0.0;
  const SpMat D = A - At;
  for (int col = 0; col < D.outerSize(); ++col)
    for (SpMat::InnerIterator it(D, col); it; ++it) num = std::max(num, std::abs(it.value()));
  for (int col = 0; col < A.outerSize(); ++col)
    for (SpMat::InnerIterator it(A, col); it; ++it) den = std::max(den, std::abs(it.value()));
  return den > 0.0 ? num / den : 0.0;
}

/// Coordinate-format text dump "row col value", one entry per line.
inline void dump_system(const LinearSystem& sys, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("dump_system: cannot open '" + path + "'");
  const auto fmt = [](double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
  };
  for (int col = 0; col < sys.A.outerSize(); ++col)
    for (SpMat::InnerIterator it(sys.A, col); it; ++it)
      out << it.row() << ' ' << it.col() << ' ' << fmt(it.value()) << '\n';
  if (!out) throw std::runtime_error("dump_system: write failed");
}

}  // namespace ipvem
