#pragma once

#include <Eigen/Dense>
#include <functional>
#include <limits>
#include <stdexcept>
#include <vector>

#include "ipvem/mesh.hpp"
#include "ipvem/monomials.hpp"
#include "ipvem/quadrature.hpp"

namespace ipvem {

/// Local degrees of freedom, in order:
///   - vertex values, one per loop vertex;
///   - per edge (loop order), the k-1 interior Gauss-Lobatto point values,
///     ordered along the loop direction;
///   - scaled internal moments against the degree-(k-2) scaled monomials.
struct ElementDofLayout {
  int k = 2;
  int n_vertices = 0;
  int n_moments = 0;
  std::vector<Vec2> point_positions;  // vertex DoFs then edge DoFs

  int size() const { return n_vertices * k + n_moments; }
  int n_points() const { return n_vertices * k; }
  int vertex_dof(int loop_pos) const { return loop_pos; }
  int edge_dof(int loop_edge, int interior_node) const {  // interior_node in 0..k-2
    return n_vertices + loop_edge * (k - 1) + interior_node;
  }
  int moment_dof(int alpha) const { return n_vertices * k + alpha; }
};

inline ElementDofLayout dof_layout(const Mesh& mesh, int cell, int k, const EdgeRule& lobatto) {
  if (k < 2) throw std::invalid_argument("dof_layout: k >= 2 required");
  ElementDofLayout l;
  l.k = k;
  const auto& loop = mesh.cells[cell];
  l.n_vertices = static_cast<int>(loop.size());
  l.n_moments = monomial_space_dim(k - 2);
  l.point_positions.reserve(l.n_points());
  for (int v : loop) l.point_positions.push_back(mesh.vertices[v]);
  for (int i = 0; i < l.n_vertices; ++i) {
    const Vec2 a = mesh.vertices[loop[i]];
    const Vec2 b = mesh.vertices[loop[(i + 1) % l.n_vertices]];
    for (int p = 1; p < k; ++p) l.point_positions.push_back(a + lobatto.nodes[p] * (b - a));
  }
  return l;
}

/// Volume quadrature points/weights of a cell, mapped over its (signed) fan.
struct CellQuadrature {
  std::vector<Vec2> points;
  Eigen::VectorXd weights;
};

inline CellQuadrature cell_quadrature(const Mesh& mesh, int cell, const TriangleRule& rule) {
  const auto& g = mesh.cell_geometry[cell];
  const int nq = static_cast<int>(rule.weights.size());
  CellQuadrature q;
  q.points.reserve(g.fan.size() * nq);
  q.weights.resize(static_cast<Eigen::Index>(g.fan.size()) * nq);
  Eigen::Index w = 0;
  for (const auto& tri : g.fan) {
    const Vec2 v0 = mesh.vertices[tri[0]], v1 = mesh.vertices[tri[1]], v2 = mesh.vertices[tri[2]];
    const double sarea = 0.5 * cross2(v1 - v0, v2 - v0);
    for (int i = 0; i < nq; ++i) {
      const auto& l = rule.barycentric[i];
      q.points.push_back(l[0] * v0 + l[1] * v1 + l[2] * v2);
      q.weights[w++] = rule.weights[i] * sarea;
    }
  }
  return q;
}

template <class F>
double integrate_cell(const Mesh& mesh, int cell, F&& f, int exactness) {
  const TriangleRule rule = triangle_rule(exactness);
  const CellQuadrature q = cell_quadrature(mesh, cell, rule);
  double s = 0.0;
  for (Eigen::Index i = 0; i < q.weights.size(); ++i) s += q.weights[i] * f(q.points[i]);
  return s;
}

struct ElementOptions {
  int k = 2;
  bool orthonormalize = false;   // solve the projector systems in an H-orthonormal basis
  double cond_limit = 1e15;      // Gram-conditioning guard
};

/// Quadrature rules shared by all cells of a run.
struct ElementRules {
  EdgeRule lobatto;        // Q^e with k+1 Gauss-Lobatto points
  TriangleRule volume;     // Gram matrices and internal moments
  TriangleRule load;       // load and error-grade integrals
};

inline ElementRules make_element_rules(int k) {
  return ElementRules{gauss_lobatto(k), triangle_rule(std::max(2 * k, 6)), triangle_rule(2 * k + 6)};
}

struct ElementOperators {
  ScaledMonomialBasis basis;   // degree k
  ElementDofLayout layout;
  Eigen::MatrixXd D;           // DoFs of the monomials, n_K x dim
  Eigen::MatrixXd P_nabla;     // H1 projector coefficients, dim x n_K
  Eigen::MatrixXd P_0;         // L2 projector coefficients
  Eigen::MatrixXd P_delta;     // H2 projector coefficients
  Eigen::MatrixXd A_loc;       // local a_h (no epsilon factor)
  Eigen::MatrixXd B_loc;       // local b_h
  Eigen::VectorXd F_loc;       // local load
  Eigen::MatrixXd H;           // mass Gram of the monomials
  Eigen::MatrixXd G_grad;      // gradient Gram
  Eigen::MatrixXd G_hess;      // Hessian Gram
  double gram_condition = 1.0;
};

/// DoF vector of a polynomial given by coefficients in a scaled-monomial
/// basis of degree <= k+2 on the same cell frame.
inline Eigen::VectorXd dofs_of_polynomial(const Mesh& mesh, int cell, const ElementDofLayout& layout,
                                          const ScaledMonomialBasis& poly_basis, const Eigen::VectorXd& coeffs) {
  Eigen::VectorXd chi(layout.size());
  const Eigen::MatrixXd vals = poly_basis.eval(layout.point_positions);
  chi.head(layout.n_points()) = vals * coeffs;
  if (layout.n_moments > 0) {
    const ScaledMonomialBasis mom_basis(layout.k - 2, poly_basis.center, poly_basis.h);
    const TriangleRule rule = triangle_rule(2 * layout.k);
    const CellQuadrature q = cell_quadrature(mesh, cell, rule);
    const Eigen::MatrixXd Em = mom_basis.eval(q.points);
    const Eigen::MatrixXd Ep = poly_basis.eval(q.points);
    const Eigen::VectorXd pv = Ep * coeffs;
    const double inv_area = 1.0 / mesh.cell_geometry[cell].area;
    for (int a = 0; a < layout.n_moments; ++a)
      chi[layout.moment_dof(a)] = inv_area * (q.weights.array() * Em.col(a).array() * pv.array()).sum();
  }
  return chi;
}

namespace detail {

struct EdgeFrame {
  Vec2 a, b;        // endpoints in loop order
  Vec2 normal;      // outward unit normal of the cell
  Vec2 tangent;     // unit tangent along the loop
  double length;
};

inline std::vector<EdgeFrame> cell_edge_frames(const Mesh& mesh, int cell) {
  const auto& loop = mesh.cells[cell];
  const int n = static_cast<int>(loop.size());
  std::vector<EdgeFrame> frames(n);
  for (int i = 0; i < n; ++i) {
    EdgeFrame f;
    f.a = mesh.vertices[loop[i]];
    f.b = mesh.vertices[loop[(i + 1) % n]];
    const Vec2 t = f.b - f.a;
    f.length = t.norm();
    f.tangent = t / f.length;
    f.normal = Vec2(f.tangent.y(), -f.tangent.x());
    frames[i] = f;
  }
  return frames;
}

}  // namespace detail

/// Full per-element IPVEM machinery: DoF matrix D, the projectors
/// P_nabla / P_0 / P_delta and the local stiffness forms. The load vector is
/// filled when a source function is supplied.
inline ElementOperators build_element_operators(const Mesh& mesh, int cell, const ElementRules& rules,
                                                const ElementOptions& opts,
                                                const std::function<double(const Vec2&)>& f = nullptr) {
  const int k = opts.k;
  if (k < 2) throw std::invalid_argument("build_element_operators: k >= 2 required");
  const auto& geom = mesh.cell_geometry[cell];
  const double hK = geom.diameter;
  const double areaK = geom.area;

  ElementOperators ops;
  ops.basis = ScaledMonomialBasis(k, geom.centroid, hK);
  ops.layout = dof_layout(mesh, cell, k, rules.lobatto);
  const int dim = ops.basis.size();
  const int nK = ops.layout.size();
  const int nV = ops.layout.n_vertices;
  const int nM = ops.layout.n_moments;

  // ---- volume quadrature tables -------------------------------------------
  const CellQuadrature vq = cell_quadrature(mesh, cell, rules.volume);
  const Eigen::MatrixXd E = ops.basis.eval(vq.points);
  const Eigen::MatrixXd Ex = ops.basis.eval(vq.points, 1, 0);
  const Eigen::MatrixXd Ey = ops.basis.eval(vq.points, 0, 1);
  const Eigen::MatrixXd Exx = ops.basis.eval(vq.points, 2, 0);
  const Eigen::MatrixXd Exy = ops.basis.eval(vq.points, 1, 1);
  const Eigen::MatrixXd Eyy = ops.basis.eval(vq.points, 0, 2);
  const auto wdot = [&](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) -> Eigen::MatrixXd {
    return A.transpose() * vq.weights.asDiagonal() * B;
  };
  ops.H = wdot(E, E);
  ops.G_grad = wdot(Ex, Ex) + wdot(Ey, Ey);
  ops.G_hess = wdot(Exx, Exx) + 2.0 * wdot(Exy, Exy) + wdot(Eyy, Eyy);

  {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ops.H, Eigen::EigenvaluesOnly);
    const double lmin = es.eigenvalues().minCoeff();
    const double lmax = es.eigenvalues().maxCoeff();
    ops.gram_condition = (lmin > 0.0) ? lmax / lmin : std::numeric_limits<double>::infinity();
    if (!(ops.gram_condition < opts.cond_limit))
      throw std::runtime_error("build_element_operators: monomial Gram matrix ill-conditioned (estimate " +
                               std::to_string(ops.gram_condition) + ") on cell " + std::to_string(cell));
  }

  // Conditioning transform: solve in an H-orthonormal basis when requested.
  Eigen::MatrixXd R = Eigen::MatrixXd::Identity(dim, dim);
  if (opts.orthonormalize) {
    const Eigen::LLT<Eigen::MatrixXd> llt(ops.H);
    if (llt.info() != Eigen::Success) throw std::runtime_error("build_element_operators: Gram Cholesky failed");
    R = llt.matrixL().solve(Eigen::MatrixXd::Identity(dim, dim));
  }

  // ---- D matrix -------------------------------------------------------------
  ops.D.resize(nK, dim);
  ops.D.topRows(ops.layout.n_points()) = ops.basis.eval(ops.layout.point_positions);
  for (int a = 0; a < nM; ++a) ops.D.row(ops.layout.moment_dof(a)) = ops.H.row(a) / areaK;

  const auto frames = detail::cell_edge_frames(mesh, cell);
  const int kp1 = k + 1;
  const auto dof_of_edge_node = [&](int edge, int p) {  // p in 0..k along the loop direction
    if (p == 0) return ops.layout.vertex_dof(edge);
    if (p == k) return ops.layout.vertex_dof((edge + 1) % nV);
    return ops.layout.edge_dof(edge, p - 1);
  };

  // ---- P_nabla ---------------------------------------------------------------
  // (grad Pi v, grad q) = -(v, Lap q) + sum_e Q^e(v dn q), with the vertex
  // average pinning the constant.
  Eigen::MatrixXd Bn = Eigen::MatrixXd::Zero(dim, nK);
  const Eigen::MatrixXd Lap = laplacian_coefficient_map(ops.basis);  // dim M_{k-2} x dim
  for (int i = 0; i < dim; ++i)
    for (int a = 0; a < nM; ++a) Bn(i, ops.layout.moment_dof(a)) -= areaK * Lap(a, i);
  for (int e = 0; e < nV; ++e) {
    const auto& fr = frames[e];
    std::vector<Vec2> nodes(kp1);
    for (int p = 0; p < kp1; ++p) nodes[p] = fr.a + rules.lobatto.nodes[p] * (fr.b - fr.a);
    const Eigen::MatrixXd Gx = ops.basis.eval(nodes, 1, 0);
    const Eigen::MatrixXd Gy = ops.basis.eval(nodes, 0, 1);
    for (int p = 0; p < kp1; ++p) {
      const int j = dof_of_edge_node(e, p);
      const double w = fr.length * rules.lobatto.weights[p];
      for (int i = 0; i < dim; ++i) Bn(i, j) += w * (fr.normal.x() * Gx(p, i) + fr.normal.y() * Gy(p, i));
    }
  }
  Eigen::MatrixXd Gt = ops.G_grad;
  {
    std::vector<Vec2> vpts(ops.layout.point_positions.begin(), ops.layout.point_positions.begin() + nV);
    Gt.row(0) = ops.basis.eval(vpts).colwise().mean();
  }
  Bn.row(0).setZero();
  for (int v = 0; v < nV; ++v) Bn(0, ops.layout.vertex_dof(v)) = 1.0 / nV;
  {
    const Eigen::MatrixXd Gp = opts.orthonormalize ? Eigen::MatrixXd(R * Gt * R.transpose()) : Gt;
    const Eigen::MatrixXd Bp = opts.orthonormalize ? Eigen::MatrixXd(R * Bn) : Bn;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(Gp);
    if (!lu.isInvertible()) throw std::runtime_error("build_element_operators: singular H1-projector system on cell " + std::to_string(cell));
    ops.P_nabla = opts.orthonormalize ? Eigen::MatrixXd(R.transpose() * lu.solve(Bp)) : Eigen::MatrixXd(lu.solve(Bp));
  }

  // ---- P_0 --------------------------------------------------------------------
  // Moments of the function: exact for M_{k-2} from DoFs, enhanced through
  // P_nabla for the tail block.
  Eigen::MatrixXd C0 = Eigen::MatrixXd::Zero(dim, nK);
  for (int a = 0; a < nM; ++a) C0(a, ops.layout.moment_dof(a)) = areaK;
  if (dim > nM) C0.bottomRows(dim - nM) = (ops.H * ops.P_nabla).bottomRows(dim - nM);
  {
    const Eigen::MatrixXd Hp = opts.orthonormalize ? Eigen::MatrixXd(R * ops.H * R.transpose()) : ops.H;
    const Eigen::MatrixXd Cp = opts.orthonormalize ? Eigen::MatrixXd(R * C0) : C0;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(Hp);
    if (ldlt.info() != Eigen::Success) throw std::runtime_error("build_element_operators: mass Gram factorization failed");
    ops.P_0 = opts.orthonormalize ? Eigen::MatrixXd(R.transpose() * ldlt.solve(Cp)) : Eigen::MatrixXd(ldlt.solve(Cp));
  }

  // ---- P_delta -----------------------------------------------------------------
  // a^K(Pi v, q) = (v, Lap^2 q) - sum_e Q^e(v dn(Lap q))
  //               + sum_e int_e (dn Pi_nabla v)(dnn q)
  //               + sum_e [v dnt q]_endpoints - sum_e Q^e(v dt(dnt q)),
  // pinned by the boundary averages of the function and its gradient.
  Eigen::MatrixXd Bd = Eigen::MatrixXd::Zero(dim, nK);
  if (k >= 4) {
    const ScaledMonomialBasis basis_km2(k - 2, geom.centroid, hK);
    const Eigen::MatrixXd Bil = laplacian_coefficient_map(basis_km2) * Lap;  // dim M_{k-4} x dim
    const int nM4 = monomial_space_dim(k - 4);
    for (int i = 0; i < dim; ++i)
      for (int a = 0; a < nM4; ++a) Bd(i, ops.layout.moment_dof(a)) += areaK * Bil(a, i);
  }
  Eigen::MatrixXd Enn = Eigen::MatrixXd::Zero(dim, dim);  // sum_e int_e (dnn m_i)(dn m_l)
  Eigen::MatrixXd Cg = Eigen::MatrixXd::Zero(3, dim);     // boundary averages of m and grad m
  Eigen::MatrixXd Rg = Eigen::MatrixXd::Zero(3, nK);      // the same averages from DoF data
  Eigen::MatrixXd GradAvgN = Eigen::MatrixXd::Zero(2, dim);  // sum_e n_e int_e dn m_l, for Rg via P_nabla
  double perimeter = 0.0;
  for (const auto& fr : frames) perimeter += fr.length;

  for (int e = 0; e < nV; ++e) {
    const auto& fr = frames[e];
    const double nx = fr.normal.x(), ny = fr.normal.y();
    const double tx = fr.tangent.x(), ty = fr.tangent.y();
    std::vector<Vec2> nodes(kp1);
    for (int p = 0; p < kp1; ++p) nodes[p] = fr.a + rules.lobatto.nodes[p] * (fr.b - fr.a);
    const Eigen::MatrixXd V0 = ops.basis.eval(nodes);
    const Eigen::MatrixXd Gx = ops.basis.eval(nodes, 1, 0);
    const Eigen::MatrixXd Gy = ops.basis.eval(nodes, 0, 1);
    const Eigen::MatrixXd Hxx = ops.basis.eval(nodes, 2, 0);
    const Eigen::MatrixXd Hxy = ops.basis.eval(nodes, 1, 1);
    const Eigen::MatrixXd Hyy = ops.basis.eval(nodes, 0, 2);
    const Eigen::MatrixXd Txxx = ops.basis.eval(nodes, 3, 0);
    const Eigen::MatrixXd Txxy = ops.basis.eval(nodes, 2, 1);
    const Eigen::MatrixXd Txyy = ops.basis.eval(nodes, 1, 2);
    const Eigen::MatrixXd Tyyy = ops.basis.eval(nodes, 0, 3);

    for (int p = 0; p < kp1; ++p) {
      const int j = dof_of_edge_node(e, p);
      const double w = fr.length * rules.lobatto.weights[p];
      for (int i = 0; i < dim; ++i) {
        // dn(Lap m_i) = n . grad(Lap m_i); third derivatives
        const double glx = Txxx(p, i) + Txyy(p, i);
        const double gly = Txxy(p, i) + Tyyy(p, i);
        Bd(i, j) -= w * (nx * glx + ny * gly);
        // dt(dnt m_i): tangential derivative of n^T Hess(m_i) t
        const double dnts = nx * tx * (tx * Txxx(p, i) + ty * Txxy(p, i)) +
                            (nx * ty + ny * tx) * (tx * Txxy(p, i) + ty * Txyy(p, i)) +
                            ny * ty * (tx * Txyy(p, i) + ty * Tyyy(p, i));
        Bd(i, j) -= w * dnts;
      }
      // quasi-average of v over the boundary, evaluated with Q^e
      Rg(0, j) += fr.length * rules.lobatto.weights[p] / perimeter;
    }
    // endpoint terms of the tangential integration by parts
    const int j0 = ops.layout.vertex_dof(e);
    const int j1 = ops.layout.vertex_dof((e + 1) % nV);
    const std::vector<Vec2> ends{fr.a, fr.b};
    const Eigen::MatrixXd Hxx_e = ops.basis.eval(ends, 2, 0);
    const Eigen::MatrixXd Hxy_e = ops.basis.eval(ends, 1, 1);
    const Eigen::MatrixXd Hyy_e = ops.basis.eval(ends, 0, 2);
    for (int i = 0; i < dim; ++i) {
      const double g_a = nx * (tx * Hxx_e(0, i) + ty * Hxy_e(0, i)) + ny * (tx * Hxy_e(0, i) + ty * Hyy_e(0, i));
      const double g_b = nx * (tx * Hxx_e(1, i) + ty * Hxy_e(1, i)) + ny * (tx * Hxy_e(1, i) + ty * Hyy_e(1, i));
      Bd(i, j1) += g_b;
      Bd(i, j0) -= g_a;
    }
    // exact edge integrals for the dn-moment substitution and the averages
    for (int p = 0; p < kp1; ++p) {
      const double w = fr.length * rules.lobatto.weights[p];
      for (int l = 0; l < dim; ++l) {
        const double dn_l = nx * Gx(p, l) + ny * Gy(p, l);
        for (int i = 0; i < dim; ++i) {
          const double dnn_i = nx * (nx * Hxx(p, i) + ny * Hxy(p, i)) + ny * (nx * Hxy(p, i) + ny * Hyy(p, i));
          Enn(i, l) += w * dnn_i * dn_l;
        }
        GradAvgN(0, l) += w * nx * dn_l / perimeter;
        GradAvgN(1, l) += w * ny * dn_l / perimeter;
        Cg(0, l) += w * V0(p, l) / perimeter;
      }
    }
    // tangential part of the gradient average: endpoint differences
    const Eigen::MatrixXd Ve = ops.basis.eval({fr.a, fr.b});
    for (int l = 0; l < dim; ++l) {
      Cg(1, l) += (tx * (Ve(1, l) - Ve(0, l))) / perimeter;
      Cg(2, l) += (ty * (Ve(1, l) - Ve(0, l))) / perimeter;
    }
    Rg(1, j1) += tx / perimeter;
    Rg(1, j0) -= tx / perimeter;
    Rg(2, j1) += ty / perimeter;
    Rg(2, j0) -= ty / perimeter;
  }
  Bd += Enn * ops.P_nabla;
  Cg.row(1) += GradAvgN.row(0);
  Cg.row(2) += GradAvgN.row(1);
  Rg.row(1) += GradAvgN.row(0) * ops.P_nabla;
  Rg.row(2) += GradAvgN.row(1) * ops.P_nabla;

  {
    // Lagrange-multiplier closure of the three-dimensional kernel. The
    // constraint rows are O(1) while the Hessian Gram scales like h_K^-2, so
    // the constraint block is equilibrated to the Gram magnitude (exact in
    // exact arithmetic, the multipliers simply rescale).
    const Eigen::MatrixXd Gh = opts.orthonormalize ? Eigen::MatrixXd(R * ops.G_hess * R.transpose()) : ops.G_hess;
    const Eigen::MatrixXd Ch = opts.orthonormalize ? Eigen::MatrixXd(Cg * R.transpose()) : Cg;
    const Eigen::MatrixXd Bh = opts.orthonormalize ? Eigen::MatrixXd(R * Bd) : Bd;
    const double cscale = std::max(1.0, Gh.diagonal().mean());
    Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dim + 3, dim + 3);
    S.topLeftCorner(dim, dim) = Gh;
    S.topRightCorner(dim, 3) = cscale * Ch.transpose();
    S.bottomLeftCorner(3, dim) = cscale * Ch;
    Eigen::MatrixXd rhs(dim + 3, nK);
    rhs.topRows(dim) = Bh;
    rhs.bottomRows(3) = cscale * Rg;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(S);
    if (!lu.isInvertible()) throw std::runtime_error("build_element_operators: singular H2-projector system on cell " + std::to_string(cell));
    const Eigen::MatrixXd sol = lu.solve(rhs);
    ops.P_delta = opts.orthonormalize ? Eigen::MatrixXd(R.transpose() * sol.topRows(dim)) : Eigen::MatrixXd(sol.topRows(dim));
  }

  // ---- local forms ----------------------------------------------------------
  const Eigen::MatrixXd Sd = Eigen::MatrixXd::Identity(nK, nK) - ops.D * ops.P_delta;
  ops.A_loc = ops.P_delta.transpose() * ops.G_hess * ops.P_delta + (1.0 / (hK * hK)) * Sd.transpose() * Sd;
  const Eigen::MatrixXd Sn = Eigen::MatrixXd::Identity(nK, nK) - ops.D * ops.P_nabla;
  ops.B_loc = ops.P_nabla.transpose() * ops.G_grad * ops.P_nabla + Sn.transpose() * Sn;

  // ---- load -------------------------------------------------------------------
  if (f) {
    const CellQuadrature lq = cell_quadrature(mesh, cell, rules.load);
    const Eigen::MatrixXd El = ops.basis.eval(lq.points);
    Eigen::VectorXd fv(lq.weights.size());
    for (Eigen::Index i = 0; i < lq.weights.size(); ++i) fv[i] = f(lq.points[i]);
    const Eigen::VectorXd bf = El.transpose() * (lq.weights.asDiagonal() * fv);
    ops.F_loc = ops.P_0.transpose() * bf;
  } else {
    ops.F_loc = Eigen::VectorXd::Zero(nK);
  }
  return ops;
}

}  // namespace ipvem
