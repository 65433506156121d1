// Test-only reference implementations. Everything here is built from the
// defining equations with its own quadrature machinery (Newton-iteration
// nodes, moment-matched weights, hardcoded degree-5 triangle rule), so a
// defect in the library kernels cannot cancel against the same defect here.
#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <tuple>
#include <utility>
#include <vector>

#include "ipvem/geometry.hpp"
#include "ipvem/mesh.hpp"
#include "ipvem/monomials.hpp"

namespace oracle {

using ipvem::Mesh;
using ipvem::Polygon;
using ipvem::ScaledMonomialBasis;
using ipvem::Vec2;

struct Rule1D {
  std::vector<double> nodes;    // on [0,1]
  std::vector<double> weights;  // sum to 1
};

/// Legendre P_n and P_n' on [-1,1] by recurrence.
inline std::pair<double, double> legendre_with_derivative(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return {1.0, 0.0};
  for (int m = 2; m <= n; ++m) {
    const double p2 = ((2 * m - 1) * x * p1 - (m - 1) * p0) / m;
    p0 = p1;
    p1 = p2;
  }
  const double d = n * (x * p1 - p0) / (x * x - 1.0);
  return {p1, d};
}

/// Gauss-Legendre nodes by Newton iteration from the Chebyshev guesses.
inline std::vector<double> gauss_nodes01(int n) {
  std::vector<double> nodes(n);
  for (int i = 0; i < n; ++i) {
    double x = -std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int it = 0; it < 100; ++it) {
      const auto [p, d] = legendre_with_derivative(n, x);
      const double dx = p / d;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    nodes[i] = 0.5 * (x + 1.0);
  }
  return nodes;
}

/// Weights from the Vandermonde moment system on [0,1].
inline std::vector<double> weights_by_moment_matching(const std::vector<double>& nodes) {
  const int n = static_cast<int>(nodes.size());
  Eigen::MatrixXd V(n, n);
  Eigen::VectorXd m(n);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) V(j, i) = std::pow(nodes[i], j);
    m[j] = 1.0 / (j + 1);
  }
  const Eigen::VectorXd w = V.fullPivLu().solve(m);
  return std::vector<double>(w.data(), w.data() + n);
}

inline Rule1D gauss01(int n) {
  Rule1D r;
  r.nodes = gauss_nodes01(n);
  r.weights = weights_by_moment_matching(r.nodes);
  return r;
}

/// Gauss-Lobatto with m nodes: endpoints plus the roots of P'_{m-1} found by
/// Newton iteration; weights moment-matched.
inline Rule1D lobatto01(int m) {
  Rule1D r;
  r.nodes.resize(m);
  r.nodes.front() = 0.0;
  r.nodes.back() = 1.0;
  const int n = m - 1;
  for (int i = 1; i < m - 1; ++i) {
    double x = -std::cos(std::numbers::pi * i / n);
    for (int it = 0; it < 100; ++it) {
      // Newton on f = P'_n, f' = P''_n derived from the Legendre ODE:
      // (1-x^2) P''_n = 2x P'_n - n(n+1) P_n.
      const auto [p, d] = legendre_with_derivative(n, x);
      const double dd = (2.0 * x * d - n * (n + 1.0) * p) / (1.0 - x * x);
      const double dx = d / dd;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    r.nodes[i] = 0.5 * (x + 1.0);
  }
  r.weights = weights_by_moment_matching(r.nodes);
  return r;
}

template <class F>
double integrate_edge(F&& f, const Vec2& a, const Vec2& b, int n = 24) {
  const Rule1D r = gauss01(n);
  const double len = (b - a).norm();
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += r.weights[i] * f(a + r.nodes[i] * (b - a));
  return s * len;
}

/// Radon's 7-point degree-5 triangle rule, hardcoded.
template <class F>
double integrate_triangle_deg5(F&& f, const Vec2& v0, const Vec2& v1, const Vec2& v2) {
  static const double s15 = std::sqrt(15.0);
  static const std::array<std::array<double, 3>, 7> bc = {{{1.0 / 3, 1.0 / 3, 1.0 / 3},
                                                           {(6 - s15) / 21, (6 - s15) / 21, 1 - 2 * (6 - s15) / 21},
                                                           {(6 - s15) / 21, 1 - 2 * (6 - s15) / 21, (6 - s15) / 21},
                                                           {1 - 2 * (6 - s15) / 21, (6 - s15) / 21, (6 - s15) / 21},
                                                           {(6 + s15) / 21, (6 + s15) / 21, 1 - 2 * (6 + s15) / 21},
                                                           {(6 + s15) / 21, 1 - 2 * (6 + s15) / 21, (6 + s15) / 21},
                                                           {1 - 2 * (6 + s15) / 21, (6 + s15) / 21, (6 + s15) / 21}}};
  static const std::array<double, 7> w = {9.0 / 40,
                                          (155 - s15) / 1200, (155 - s15) / 1200, (155 - s15) / 1200,
                                          (155 + s15) / 1200, (155 + s15) / 1200, (155 + s15) / 1200};
  const double sarea = 0.5 * ipvem::cross2(v1 - v0, v2 - v0);
  double s = 0.0;
  for (int q = 0; q < 7; ++q) s += w[q] * f(bc[q][0] * v0 + bc[q][1] * v1 + bc[q][2] * v2);
  return s * sarea;
}

/// Uniformly refines a triangle subdiv x subdiv times and applies the
/// degree-5 rule on every piece.
template <class F>
double integrate_triangle_refined(F&& f, const Vec2& v0, const Vec2& v1, const Vec2& v2, int subdiv) {
  double s = 0.0;
  for (int i = 0; i < subdiv; ++i)
    for (int j = 0; j + i < subdiv; ++j) {
      const auto map = [&](double a, double b) { return v0 + a * (v1 - v0) + b * (v2 - v0); };
      const double d = 1.0 / subdiv;
      s += integrate_triangle_deg5(f, map(i * d, j * d), map((i + 1) * d, j * d), map(i * d, (j + 1) * d));
      if (j + i + 1 < subdiv)
        s += integrate_triangle_deg5(f, map((i + 1) * d, j * d), map((i + 1) * d, (j + 1) * d), map(i * d, (j + 1) * d));
    }
  return s;
}

/// Signed-fan polygon integration with the refined degree-5 rule.
template <class F>
double integrate_polygon(F&& f, const Polygon& poly, int subdiv = 10) {
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i)
    s += integrate_triangle_refined(f, poly[0], poly[i], poly[i + 1], subdiv);
  return s;
}

/// Duffy-transformed tensor Gauss rule on a triangle, exact for polynomials
/// of total degree <= d (independent Newton-iterated nodes).
template <class F>
double integrate_triangle_exact(F&& f, const Vec2& v0, const Vec2& v1, const Vec2& v2, int d) {
  const int n = d / 2 + 2;
  const Rule1D g = gauss01(n);
  const double sarea = 0.5 * ipvem::cross2(v1 - v0, v2 - v0);
  double s = 0.0;
  for (int j = 0; j < n; ++j) {
    const double eta = g.nodes[j];
    for (int i = 0; i < n; ++i) {
      const double xi = g.nodes[i];
      const Vec2 x = v0 + xi * (1.0 - eta) * (v1 - v0) + eta * (v2 - v0);
      s += g.weights[i] * g.weights[j] * (1.0 - eta) * f(x);
    }
  }
  return 2.0 * s * sarea;
}

/// Polynomial-exact signed-fan polygon integration.
template <class F>
double integrate_polygon_exact(F&& f, const Polygon& poly, int d) {
  double s = 0.0;
  for (std::size_t i = 1; i + 1 < poly.size(); ++i)
    s += integrate_triangle_exact(f, poly[0], poly[i], poly[i + 1], d);
  return s;
}

/// Exact monomial-basis expansion coefficients of Lap(m_i): differentiating
/// xi^a eta^b shifts exponents down by two and scales by h^-2.
inline Eigen::VectorXd laplace_coefficients(const ScaledMonomialBasis& basis, int i, int target_degree) {
  const int nt = ipvem::monomial_space_dim(target_degree);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(nt);
  const auto [a, b] = basis.exponents[i];
  const auto idx = [](int ta, int tb) {
    const int d = ta + tb;
    return d * (d + 1) / 2 + tb;
  };
  if (a >= 2 && a - 2 + b <= target_degree) c[idx(a - 2, b)] += a * (a - 1) / (basis.h * basis.h);
  if (b >= 2 && a + b - 2 <= target_degree) c[idx(a, b - 2)] += b * (b - 1) / (basis.h * basis.h);
  return c;
}

/// Derivative of a scaled monomial, evaluated directly from the exponent rule.
inline double monomial_derivative(const ScaledMonomialBasis& basis, int j, const Vec2& p, int ax, int ay) {
  const auto [a, b] = basis.exponents[j];
  if (a < ax || b < ay) return 0.0;
  double coef = 1.0;
  for (int i = 0; i < ax; ++i) coef *= (a - i);
  for (int i = 0; i < ay; ++i) coef *= (b - i);
  const double xi = (p.x() - basis.center.x()) / basis.h;
  const double eta = (p.y() - basis.center.y()) / basis.h;
  return coef * std::pow(1.0 / basis.h, ax + ay) * std::pow(xi, a - ax) * std::pow(eta, b - ay);
}

struct ProjectorSet {
  Eigen::MatrixXd P_nabla, P_0, P_delta;
};

/// Reference construction of the three projector matrices straight from their
/// defining systems. `perturb_lobatto_weight` shifts one Q^e weight to expose
/// the sensitivity of the comparison.
inline ProjectorSet projectors(const Mesh& mesh, int cell, int k, double perturb_lobatto_weight = 0.0) {
  const auto& geom = mesh.cell_geometry[cell];
  const Polygon poly = [&] {
    Polygon p;
    for (int v : mesh.cells[cell]) p.push_back(mesh.vertices[v]);
    return p;
  }();
  const int nv = static_cast<int>(poly.size());
  const ScaledMonomialBasis basis(k, geom.centroid, geom.diameter);
  const int dim = basis.size();
  const int nm = ipvem::monomial_space_dim(k - 2);
  const int nK = nv * k + nm;
  Rule1D lob = lobatto01(k + 1);
  if (perturb_lobatto_weight != 0.0) lob.weights[1] += perturb_lobatto_weight;

  const auto dof_index = [&](int edge, int p) {  // lobatto node p on loop edge
    if (p == 0) return edge;
    if (p == k) return (edge + 1) % nv;
    return nv + edge * (k - 1) + (p - 1);
  };

  // Gram matrices by refined quadrature.
  Eigen::MatrixXd H(dim, dim), G(dim, dim), GD(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      H(i, j) = integrate_polygon_exact([&](const Vec2& p) { return monomial_derivative(basis, i, p, 0, 0) * monomial_derivative(basis, j, p, 0, 0); }, poly, 2 * k);
      G(i, j) = integrate_polygon_exact([&](const Vec2& p) {
        return monomial_derivative(basis, i, p, 1, 0) * monomial_derivative(basis, j, p, 1, 0) +
               monomial_derivative(basis, i, p, 0, 1) * monomial_derivative(basis, j, p, 0, 1);
      }, poly, 2 * k);
      GD(i, j) = integrate_polygon_exact([&](const Vec2& p) {
        return monomial_derivative(basis, i, p, 2, 0) * monomial_derivative(basis, j, p, 2, 0) +
               2.0 * monomial_derivative(basis, i, p, 1, 1) * monomial_derivative(basis, j, p, 1, 1) +
               monomial_derivative(basis, i, p, 0, 2) * monomial_derivative(basis, j, p, 0, 2);
      }, poly, 2 * k);
    }

  // D matrix.
  Eigen::MatrixXd D(nK, dim);
  for (int e = 0; e < nv; ++e) {
    const Vec2 a = poly[e], b = poly[(e + 1) % nv];
    for (int p = 0; p < k; ++p) {
      const Vec2 x = a + lob.nodes[p] * (b - a);
      for (int j = 0; j < dim; ++j) D(dof_index(e, p), j) = monomial_derivative(basis, j, x, 0, 0);
    }
  }
  for (int al = 0; al < nm; ++al)
    for (int j = 0; j < dim; ++j) D(nv * k + al, j) = H(al, j) / geom.area;

  const auto edge_frame = [&](int e) {
    const Vec2 a = poly[e], b = poly[(e + 1) % nv];
    const Vec2 t = (b - a).normalized();
    return std::tuple<Vec2, Vec2, Vec2, Vec2, double>(a, b, Vec2(t.y(), -t.x()), t, (b - a).norm());
  };

  // ---- P_nabla: (grad Pi v, grad q) = -(v, Lap q) + sum Q^e(v dn q) ---------
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(dim, nK);
  for (int i = 0; i < dim; ++i) {
    // (v, Lap m_i) = sum_al c_al |K| * moment_al(v) with Lap m_i = sum c_al m_al
    const Eigen::VectorXd lap_c = laplace_coefficients(basis, i, k - 2);
    for (int al = 0; al < nm; ++al) B(i, nv * k + al) -= geom.area * lap_c[al];
    for (int e = 0; e < nv; ++e) {
      const auto [a, b, n, t, len] = edge_frame(e);
      for (int p = 0; p <= k; ++p) {
        const Vec2 x = a + lob.nodes[p] * (b - a);
        const double dn = n.x() * monomial_derivative(basis, i, x, 1, 0) + n.y() * monomial_derivative(basis, i, x, 0, 1);
        B(i, dof_index(e, p)) += len * lob.weights[p] * dn;
      }
    }
  }
  Eigen::MatrixXd Gt = G;
  Gt.row(0).setZero();
  B.row(0).setZero();
  for (int j = 0; j < dim; ++j) {
    double s = 0.0;
    for (int v = 0; v < nv; ++v) s += monomial_derivative(basis, j, poly[v], 0, 0);
    Gt(0, j) = s / nv;
  }
  for (int v = 0; v < nv; ++v) B(0, v) = 1.0 / nv;
  ProjectorSet out;
  out.P_nabla = Gt.fullPivLu().solve(B);

  // ---- P_0 -------------------------------------------------------------------
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(dim, nK);
  for (int al = 0; al < nm; ++al) C(al, nv * k + al) = geom.area;
  if (dim > nm) C.bottomRows(dim - nm) = (H * out.P_nabla).bottomRows(dim - nm);
  out.P_0 = H.fullPivLu().solve(C);

  // ---- P_delta ----------------------------------------------------------------
  // a^K(Pi v, q) = (v, Lap^2 q) - sum Q^e(v dn Lap q) + sum int (dn Pi_nab v)(dnn q)
  //              + endpoint terms - sum Q^e(v dt dnt q); averages pin the kernel.
  Eigen::MatrixXd Bd = Eigen::MatrixXd::Zero(dim, nK);
  if (k >= 4) {
    const ScaledMonomialBasis basis_km2(k - 2, geom.centroid, geom.diameter);
    const int nm4 = ipvem::monomial_space_dim(k - 4);
    for (int i = 0; i < dim; ++i) {
      // Lap^2 m_i expanded in the degree-(k-4) monomials
      const Eigen::VectorXd lap_c = laplace_coefficients(basis, i, k - 2);
      Eigen::VectorXd bil_c = Eigen::VectorXd::Zero(nm4);
      for (int l = 0; l < static_cast<int>(lap_c.size()); ++l)
        if (lap_c[l] != 0.0) bil_c += lap_c[l] * laplace_coefficients(basis_km2, l, k - 4);
      for (int al = 0; al < nm4; ++al) Bd(i, nv * k + al) += geom.area * bil_c[al];
    }
  }
  Eigen::MatrixXd Cg = Eigen::MatrixXd::Zero(3, dim);
  Eigen::MatrixXd Rg = Eigen::MatrixXd::Zero(3, nK);
  double perimeter = 0.0;
  for (int e = 0; e < nv; ++e) perimeter += std::get<4>(edge_frame(e));
  for (int e = 0; e < nv; ++e) {
    const auto [a, b, n, t, len] = edge_frame(e);
    const auto dnn = [&](int i, const Vec2& x) {
      return n.x() * n.x() * monomial_derivative(basis, i, x, 2, 0) +
             2.0 * n.x() * n.y() * monomial_derivative(basis, i, x, 1, 1) +
             n.y() * n.y() * monomial_derivative(basis, i, x, 0, 2);
    };
    const auto dnt = [&](int i, const Vec2& x) {
      return n.x() * t.x() * monomial_derivative(basis, i, x, 2, 0) +
             (n.x() * t.y() + n.y() * t.x()) * monomial_derivative(basis, i, x, 1, 1) +
             n.y() * t.y() * monomial_derivative(basis, i, x, 0, 2);
    };
    const auto dn_laplace = [&](int i, const Vec2& x) {
      return n.x() * (monomial_derivative(basis, i, x, 3, 0) + monomial_derivative(basis, i, x, 1, 2)) +
             n.y() * (monomial_derivative(basis, i, x, 2, 1) + monomial_derivative(basis, i, x, 0, 3));
    };
    const auto dt_dnt = [&](int i, const Vec2& x) {
      const double c_xxx = n.x() * t.x() * t.x();
      const double c_xxy = 2.0 * n.x() * t.x() * t.y() + n.y() * t.x() * t.x();
      const double c_xyy = n.x() * t.y() * t.y() + 2.0 * n.y() * t.x() * t.y();
      const double c_yyy = n.y() * t.y() * t.y();
      return c_xxx * monomial_derivative(basis, i, x, 3, 0) + c_xxy * monomial_derivative(basis, i, x, 2, 1) +
             c_xyy * monomial_derivative(basis, i, x, 1, 2) + c_yyy * monomial_derivative(basis, i, x, 0, 3);
    };
    for (int i = 0; i < dim; ++i) {
      for (int p = 0; p <= k; ++p) {
        const Vec2 x = a + lob.nodes[p] * (b - a);
        Bd(i, dof_index(e, p)) -= len * lob.weights[p] * (dn_laplace(i, x) + dt_dnt(i, x));
      }
      Bd(i, dof_index(e, k)) += dnt(i, b);
      Bd(i, dof_index(e, 0)) -= dnt(i, a);
      // exact edge integral of (dn Pi_nabla v)(dnn q)
      for (int l = 0; l < dim; ++l) {
        const double val = integrate_edge([&](const Vec2& x) {
          return dnn(i, x) * (n.x() * monomial_derivative(basis, l, x, 1, 0) + n.y() * monomial_derivative(basis, l, x, 0, 1));
        }, a, b);
        for (int j = 0; j < nK; ++j) Bd(i, j) += val * out.P_nabla(l, j);
      }
    }
    // constraint rows
    for (int l = 0; l < dim; ++l) {
      Cg(0, l) += integrate_edge([&](const Vec2& x) { return monomial_derivative(basis, l, x, 0, 0); }, a, b) / perimeter;
      const double dn_int = integrate_edge([&](const Vec2& x) {
        return n.x() * monomial_derivative(basis, l, x, 1, 0) + n.y() * monomial_derivative(basis, l, x, 0, 1);
      }, a, b);
      Cg(1, l) += (n.x() * dn_int + t.x() * (monomial_derivative(basis, l, b, 0, 0) - monomial_derivative(basis, l, a, 0, 0))) / perimeter;
      Cg(2, l) += (n.y() * dn_int + t.y() * (monomial_derivative(basis, l, b, 0, 0) - monomial_derivative(basis, l, a, 0, 0))) / perimeter;
      for (int j = 0; j < nK; ++j) {
        Rg(1, j) += n.x() * dn_int * out.P_nabla(l, j) / perimeter;
        Rg(2, j) += n.y() * dn_int * out.P_nabla(l, j) / perimeter;
      }
    }
    for (int p = 0; p <= k; ++p) Rg(0, dof_index(e, p)) += len * lob.weights[p] / perimeter;
    Rg(1, dof_index(e, k)) += t.x() / perimeter;
    Rg(1, dof_index(e, 0)) -= t.x() / perimeter;
    Rg(2, dof_index(e, k)) += t.y() / perimeter;
    Rg(2, dof_index(e, 0)) -= t.y() / perimeter;
  }
  Eigen::MatrixXd S = Eigen::MatrixXd::Zero(dim + 3, dim + 3);
  S.topLeftCorner(dim, dim) = GD;
  S.topRightCorner(dim, 3) = Cg.transpose();
  S.bottomLeftCorner(3, dim) = Cg;
  Eigen::MatrixXd rhs(dim + 3, nK);
  rhs.topRows(dim) = Bd;
  rhs.bottomRows(3) = Rg;
  out.P_delta = S.fullPivLu().solve(rhs).topRows(dim);
  return out;
}

/// Deterministic simple CCW test polygons: radially perturbed regular n-gons.
inline Polygon random_polygon(int n, std::uint64_t seed, double irregularity = 0.3) {
  std::mt19937_64 rng(seed);
  const auto uni = [&]() { return (rng() >> 11) * 0x1.0p-53; };
  const Vec2 center(0.2 + 0.6 * uni(), 0.2 + 0.6 * uni());
  const double base = 0.2 + 0.3 * uni();
  Polygon p(n);
  for (int i = 0; i < n; ++i) {
    const double ang = 2.0 * std::numbers::pi * (i + irregularity * (uni() - 0.5)) / n;
    const double r = base * (1.0 + irregularity * (uni() - 0.5));
    p[i] = center + r * Vec2(std::cos(ang), std::sin(ang));
  }
  return p;
}

inline Mesh single_cell_mesh(const Polygon& poly) {
  std::vector<int> loop(poly.size());
  for (std::size_t i = 0; i < poly.size(); ++i) loop[i] = static_cast<int>(i);
  return ipvem::build_topology(std::vector<Vec2>(poly.begin(), poly.end()), {loop});
}

}  // namespace oracle
