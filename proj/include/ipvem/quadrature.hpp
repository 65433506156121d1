#pragma once

#include <Eigen/Dense>
#include <array>
#include <cmath>
#include <functional>
#include <stdexcept>
#include <vector>

#include "ipvem/geometry.hpp"

namespace ipvem {

/// Quadrature rule on the reference segment [0,1]. Weights sum to 1;
/// callers scale by the edge length.
struct EdgeRule {
  std::vector<double> nodes;
  std::vector<double> weights;
  int exactness = 0;
};

namespace detail {

/// Golub-Welsch: nodes/weights of the Gauss rule for a weight function with
/// Jacobi-matrix recurrence coefficients (diag a, offdiag b) and total mass mu0.
inline void golub_welsch(const Eigen::VectorXd& a, const Eigen::VectorXd& b, double mu0,
                         std::vector<double>& nodes, std::vector<double>& weights) {
  const int n = static_cast<int>(a.size());
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    J(i, i) = a[i];
    if (i + 1 < n) J(i, i + 1) = J(i + 1, i) = b[i];
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  nodes.resize(n);
  weights.resize(n);
  for (int i = 0; i < n; ++i) {
    nodes[i] = es.eigenvalues()[i];
    const double v0 = es.eigenvectors()(0, i);
    weights[i] = mu0 * v0 * v0;
  }
}

/// Legendre polynomial P_n(x) by the three-term recurrence.
inline double legendre(int n, double x) {
  double p0 = 1.0, p1 = x;
  if (n == 0) return p0;
  for (int m = 2; m <= n; ++m) {
    const double p2 = ((2 * m - 1) * x * p1 - (m - 1) * p0) / m;
    p0 = p1;
    p1 = p2;
  }
  return p1;
}

}  // namespace detail

/// n-point Gauss-Legendre rule on [0,1], exact for degree <= 2n-1.
inline EdgeRule gauss_legendre(int n) {
  if (n < 1) throw std::invalid_argument("gauss_legendre: n >= 1 required");
  EdgeRule r;
  r.exactness = 2 * n - 1;
  Eigen::VectorXd a = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd b(n > 1 ? n - 1 : 0);
  for (int i = 1; i < n; ++i) b[i - 1] = i / std::sqrt(4.0 * i * i - 1.0);
  detail::golub_welsch(a, b, 2.0, r.nodes, r.weights);
  for (int i = 0; i < n; ++i) {
    r.nodes[i] = 0.5 * (r.nodes[i] + 1.0);
    r.weights[i] *= 0.5;
  }
  for (int i = 0; i < n / 2; ++i) {
    const double mid_n = 0.5 * (r.nodes[i] + (1.0 - r.nodes[n - 1 - i]));
    r.nodes[i] = mid_n;
    r.nodes[n - 1 - i] = 1.0 - mid_n;
    const double mid_w = 0.5 * (r.weights[i] + r.weights[n - 1 - i]);
    r.weights[i] = r.weights[n - 1 - i] = mid_w;
  }
  if (n % 2 == 1) r.nodes[n / 2] = 0.5;
  return r;
}

/// (k+1)-point Gauss-Lobatto rule on [0,1] including both endpoints,
/// exact for degree <= 2k-1.
inline EdgeRule gauss_lobatto(int k) {
  if (k < 1) throw std::invalid_argument("gauss_lobatto: k >= 1 required");
  const int m = k + 1;  // node count
  EdgeRule r;
  r.exactness = 2 * k - 1;
  std::vector<double> x(m);
  x.front() = -1.0;
  x.back() = 1.0;
  if (m > 2) {
    // Interior nodes are the roots of P'_{m-1}, i.e. the Gauss nodes of the
    // Jacobi(1,1) weight (1-x^2).
    const int ni = m - 2;
    Eigen::VectorXd a = Eigen::VectorXd::Zero(ni);
    Eigen::VectorXd b(ni > 1 ? ni - 1 : 0);
    for (int i = 1; i < ni; ++i) b[i - 1] = std::sqrt(i * (i + 2.0) / ((2.0 * i + 1.0) * (2.0 * i + 3.0)));
    std::vector<double> xn, wn;
    detail::golub_welsch(a, b, 4.0 / 3.0, xn, wn);
    for (int i = 0; i < ni; ++i) x[i + 1] = xn[i];
  }
  r.nodes.resize(m);
  r.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    const double p = detail::legendre(m - 1, x[i]);
    const double w = 2.0 / (m * (m - 1) * p * p);
    r.nodes[i] = 0.5 * (x[i] + 1.0);
    r.weights[i] = 0.5 * w;
  }
  // exact symmetry about 1/2
  for (int i = 0; i < m / 2; ++i) {
    const double mid_n = 0.5 * (r.nodes[i] + (1.0 - r.nodes[m - 1 - i]));
    r.nodes[i] = mid_n;
    r.nodes[m - 1 - i] = 1.0 - mid_n;
    const double mid_w = 0.5 * (r.weights[i] + r.weights[m - 1 - i]);
    r.weights[i] = r.weights[m - 1 - i] = mid_w;
  }
  if (m % 2 == 1) r.nodes[m / 2] = 0.5;
  return r;
}

/// Quadrature rule on the reference triangle {x,y >= 0, x+y <= 1},
/// stored as barycentric nodes with weights summing to 1.
struct TriangleRule {
  std::vector<std::array<double, 3>> barycentric;
  std::vector<double> weights;
  int exactness = 0;
};

/// Conical-product rule: Gauss-Legendre x Gauss-Jacobi(1,0), exact for
/// total degree <= d.
inline TriangleRule triangle_rule(int d) {
  if (d < 0 || d > 24) throw std::invalid_argument("triangle_rule: degree out of supported range");
  const int n = d / 2 + 1;
  EdgeRule leg = gauss_legendre(n);
  // Gauss-Jacobi(1,0): weight (1-x) on [-1,1], mapped to weight 2(1-s) on [0,1].
  Eigen::VectorXd a(n), b(n > 1 ? n - 1 : 0);
  for (int i = 0; i < n; ++i) a[i] = -1.0 / ((2.0 * i + 1.0) * (2.0 * i + 3.0));
  for (int i = 1; i < n; ++i) b[i - 1] = std::sqrt(i * (i + 1.0)) / (2.0 * i + 1.0);
  std::vector<double> xj, wj;
  detail::golub_welsch(a, b, 2.0, xj, wj);
  TriangleRule r;
  r.exactness = d;
  r.barycentric.reserve(n * n);
  r.weights.reserve(n * n);
  for (int j = 0; j < n; ++j) {
    const double eta = 0.5 * (xj[j] + 1.0);
    const double wq = wj[j] / 4.0;  // integral of (1-eta) over [0,1] is 1/2
    for (int i = 0; i < n; ++i) {
      const double xi = leg.nodes[i] * (1.0 - eta);
      // reference coordinates (xi, eta); weights normalized to sum to 1
      r.barycentric.push_back({1.0 - xi - eta, xi, eta});
      r.weights.push_back(2.0 * leg.weights[i] * wq);
    }
  }
  return r;
}

/// Integrates f over the triangle (v0,v1,v2); the triangle may be negatively
/// oriented, in which case the signed area weights the result.
template <class F>
double integrate_triangle(const TriangleRule& rule, const Vec2& v0, const Vec2& v1, const Vec2& v2, F&& f) {
  const double sarea = 0.5 * cross2(v1 - v0, v2 - v0);
  double s = 0.0;
  for (std::size_t q = 0; q < rule.weights.size(); ++q) {
    const auto& l = rule.barycentric[q];
    const Vec2 x = l[0] * v0 + l[1] * v1 + l[2] * v2;
    s += rule.weights[q] * f(x);
  }
  return s * sarea;
}

}  // namespace ipvem
