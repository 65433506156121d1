#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

#include "ipvem/geometry.hpp"

namespace ipvem {

inline int monomial_space_dim(int degree) { return degree < 0 ? 0 : (degree + 1) * (degree + 2) / 2; }

/// Scaled monomials m(x) = ((x - center)/h)^a ((y - center)/h)^b, |a+b| <= degree,
/// ordered graded-lexicographically: 1, xi, eta, xi^2, xi*eta, eta^2, ...
struct ScaledMonomialBasis {
  int degree = 0;
  Vec2 center = Vec2::Zero();
  double h = 1.0;
  std::vector<std::pair<int, int>> exponents;

  ScaledMonomialBasis() = default;
  ScaledMonomialBasis(int degree_, const Vec2& center_, double h_)
      : degree(degree_), center(center_), h(h_) {
    if (degree < 0) throw std::invalid_argument("ScaledMonomialBasis: degree >= 0 required");
    if (!(h > 0.0)) throw std::invalid_argument("ScaledMonomialBasis: h > 0 required");
    exponents.reserve(monomial_space_dim(degree));
    for (int d = 0; d <= degree; ++d)
      for (int j = 0; j <= d; ++j) exponents.emplace_back(d - j, j);
  }

  int size() const { return static_cast<int>(exponents.size()); }

  /// Table of the partial derivative d^(ax+ay)/dx^ax dy^ay of every basis
  /// function at every point: (points x basis) matrix. ax + ay <= 3.
  Eigen::MatrixXd eval(const std::vector<Vec2>& points, int ax, int ay) const {
    if (ax < 0 || ay < 0 || ax + ay > 3) throw std::invalid_argument("ScaledMonomialBasis::eval: derivative order must be in 0..3");
    const int np = static_cast<int>(points.size());
    const int nb = size();
    Eigen::MatrixXd out(np, nb);
    const double scale = std::pow(1.0 / h, ax + ay);
    for (int p = 0; p < np; ++p) {
      const double xi = (points[p].x() - center.x()) / h;
      const double eta = (points[p].y() - center.y()) / h;
      for (int j = 0; j < nb; ++j) {
        const auto [a, b] = exponents[j];
        if (a < ax || b < ay) {
          out(p, j) = 0.0;
          continue;
        }
        double coef = 1.0;
        for (int i = 0; i < ax; ++i) coef *= (a - i);
        for (int i = 0; i < ay; ++i) coef *= (b - i);
        out(p, j) = coef * scale * ipow(xi, a - ax) * ipow(eta, b - ay);
      }
    }
    return out;
  }

  Eigen::MatrixXd eval(const std::vector<Vec2>& points) const { return eval(points, 0, 0); }

  /// Value of the polynomial with coefficient vector c at a single point.
  double value(const Eigen::VectorXd& c, const Vec2& x, int ax = 0, int ay = 0) const {
    return (eval({x}, ax, ay) * c)(0);
  }

 private:
  static double ipow(double x, int n) {
    double r = 1.0;
    for (int i = 0; i < n; ++i) r *= x;
    return r;
  }
};

/// Coefficient map of the derivative d^(ax+ay)/dx^ax dy^ay from the degree-k
/// scaled-monomial space to the degree-(k-ax-ay) one (same center and h).
/// Exact: differentiating monomials only shifts exponents and scales by h.
inline Eigen::MatrixXd derivative_coefficient_map(const ScaledMonomialBasis& basis, int ax, int ay) {
  const int kd = basis.degree - ax - ay;
  const ScaledMonomialBasis target(kd < 0 ? 0 : kd, basis.center, basis.h);
  const int nto = kd < 0 ? 0 : target.size();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(nto, basis.size());
  if (kd < 0) return M;
  const double scale = std::pow(1.0 / basis.h, ax + ay);
  for (int j = 0; j < basis.size(); ++j) {
    const auto [a, b] = basis.exponents[j];
    if (a < ax || b < ay) continue;
    double coef = 1.0;
    for (int i = 0; i < ax; ++i) coef *= (a - i);
    for (int i = 0; i < ay; ++i) coef *= (b - i);
    const int ta = a - ax, tb = b - ay;
    const int d = ta + tb;
    const int row = d * (d + 1) / 2 + tb;
    M(row, j) = coef * scale;
  }
  return M;
}

/// Coefficient map of the Laplacian: degree k -> degree k-2.
inline Eigen::MatrixXd laplacian_coefficient_map(const ScaledMonomialBasis& basis) {
  return derivative_coefficient_map(basis, 2, 0) + derivative_coefficient_map(basis, 0, 2);
}

}  // namespace ipvem
