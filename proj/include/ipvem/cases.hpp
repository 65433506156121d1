#pragma once

#include <cmath>
#include <functional>
#include <numbers>
#include <stdexcept>
#include <string>

#include "ipvem/assembly.hpp"
#include "ipvem/mesh_generators.hpp"

namespace ipvem {

/// First and second partial derivatives of the error reference function.
struct RefDerivatives {
  double u = 0.0;
  double ux = 0.0, uy = 0.0;
  double uxx = 0.0, uxy = 0.0, uyy = 0.0;
};

/// A manufactured problem: source, boundary data derived from the exact
/// solution, and the reference function the energy error compares against
/// (the exact solution itself, or the limiting Poisson solution when the
/// exact solution is unavailable).
struct ManufacturedCase {
  std::string name;
  double epsilon = 1.0;
  int recommended_k = 2;
  Polygon domain;
  std::function<double(const Vec2&)> f;
  BoundaryData boundary;
  std::function<RefDerivatives(const Vec2&)> reference;
};

namespace detail {

/// One-dimensional factor of the layered tensor-product solution:
/// g(t) = exp(sin pi t) - 1 - pi*eps*(cosh(1/(2 eps)) - cosh((2t-1)/(2 eps)))/sinh(1/(2 eps)),
/// with derivatives up to fourth order. The cosh/sinh ratios are expressed
/// through exponentials of non-positive arguments so nothing overflows as
/// eps -> 0.
struct LayerFactor {
  double g, g1, g2, g3, g4;
};

inline LayerFactor layer_factor(double t, double eps) {
  constexpr double pi = std::numbers::pi;
  const double a = 0.5 / eps;
  const double b = (2.0 * t - 1.0) * 0.5 / eps;
  const double em2a = std::exp(-2.0 * a);
  const double eba = std::exp(b - a);
  const double emba = std::exp(-b - a);
  const double denom = 1.0 - em2a;
  const double S = (eba - emba) / denom;                 // sinh(b)/sinh(a)
  const double C = (eba + emba) / denom;                 // cosh(b)/sinh(a)
  const double cosh_ratio = (1.0 + em2a - eba - emba) / denom;  // (cosh a - cosh b)/sinh a
  const double s = std::sin(pi * t);
  const double c = std::cos(pi * t);
  const double E = std::exp(s);
  LayerFactor r;
  r.g = E - 1.0 - pi * eps * cosh_ratio;
  r.g1 = pi * c * E + pi * S;
  r.g2 = pi * pi * (c * c - s) * E + (pi / eps) * C;
  r.g3 = pi * pi * pi * c * (c * c - 3.0 * s - 1.0) * E + (pi / (eps * eps)) * S;
  r.g4 = pi * pi * pi * pi * (c * c * c * c - 6.0 * s * c * c - 4.0 * c * c + 3.0 * s * s + s) * E +
         (pi / (eps * eps * eps)) * C;
  return r;
}

}  // namespace detail

/// Example 1: u = eps(exp(-x/eps) + exp(-y/eps)) - x^2 y on the unit square;
/// the source f = 2y is independent of eps.
inline ManufacturedCase example_case_1(double eps) {
  ManufacturedCase c;
  c.name = "example1";
  c.epsilon = eps;
  c.recommended_k = 2;
  c.domain = unit_square_polygon();
  c.f = [](const Vec2& p) { return 2.0 * p.y(); };
  const auto value = [eps](const Vec2& p) {
    return eps * (std::exp(-p.x() / eps) + std::exp(-p.y() / eps)) - p.x() * p.x() * p.y();
  };
  const auto grad = [eps](const Vec2& p) {
    const double ex = std::exp(-p.x() / eps);
    const double ey = std::exp(-p.y() / eps);
    return Vec2(-ex - 2.0 * p.x() * p.y(), -ey - p.x() * p.x());
  };
  c.boundary.g_D = value;
  c.boundary.g_N = [grad](const Vec2& p, const Vec2& n) { return n.dot(grad(p)); };
  c.reference = [eps, value, grad](const Vec2& p) {
    RefDerivatives r;
    const double ex = std::exp(-p.x() / eps);
    const double ey = std::exp(-p.y() / eps);
    r.u = value(p);
    const Vec2 g = grad(p);
    r.ux = g.x();
    r.uy = g.y();
    r.uxx = ex / eps - 2.0 * p.y();
    r.uxy = -2.0 * p.x();
    r.uyy = ey / eps;
    return r;
  };
  return c;
}

/// Example 2: tensor product u = g(x) g(y) of the layered factor; defaults to
/// the L-shaped domain.
inline ManufacturedCase example_case_2(double eps, Polygon domain = l_shape_polygon()) {
  ManufacturedCase c;
  c.name = "example2";
  c.epsilon = eps;
  c.recommended_k = 3;
  c.domain = std::move(domain);
  c.f = [eps](const Vec2& p) {
    const auto gx = detail::layer_factor(p.x(), eps);
    const auto gy = detail::layer_factor(p.y(), eps);
    const double bih = gx.g4 * gy.g + 2.0 * gx.g2 * gy.g2 + gx.g * gy.g4;
    const double lap = gx.g2 * gy.g + gx.g * gy.g2;
    return eps * eps * bih - lap;
  };
  c.boundary.g_D = [eps](const Vec2& p) {
    return detail::layer_factor(p.x(), eps).g * detail::layer_factor(p.y(), eps).g;
  };
  c.boundary.g_N = [eps](const Vec2& p, const Vec2& n) {
    const auto gx = detail::layer_factor(p.x(), eps);
    const auto gy = detail::layer_factor(p.y(), eps);
    return n.x() * gx.g1 * gy.g + n.y() * gx.g * gy.g1;
  };
  c.reference = [eps](const Vec2& p) {
    const auto gx = detail::layer_factor(p.x(), eps);
    const auto gy = detail::layer_factor(p.y(), eps);
    RefDerivatives r;
    r.u = gx.g * gy.g;
    r.ux = gx.g1 * gy.g;
    r.uy = gx.g * gy.g1;
    r.uxx = gx.g2 * gy.g;
    r.uxy = gx.g1 * gy.g1;
    r.uyy = gx.g * gy.g2;
    return r;
  };
  return c;
}

/// Example 3: f = -Lap u0 with u0 = sin(pi x) sin(pi y); the true solution is
/// unknown, the error is measured against u0. Clamped homogeneous data.
inline ManufacturedCase example_case_3(double eps) {
  constexpr double pi = std::numbers::pi;
  ManufacturedCase c;
  c.name = "example3";
  c.epsilon = eps;
  c.recommended_k = 2;
  c.domain = unit_square_polygon();
  c.f = [pi](const Vec2& p) { return 2.0 * pi * pi * std::sin(pi * p.x()) * std::sin(pi * p.y()); };
  c.reference = [pi](const Vec2& p) {
    const double sx = std::sin(pi * p.x()), cx = std::cos(pi * p.x());
    const double sy = std::sin(pi * p.y()), cy = std::cos(pi * p.y());
    RefDerivatives r;
    r.u = sx * sy;
    r.ux = pi * cx * sy;
    r.uy = pi * sx * cy;
    r.uxx = -pi * pi * sx * sy;
    r.uxy = pi * pi * cx * cy;
    r.uyy = -pi * pi * sx * sy;
    return r;
  };
  return c;
}

inline ManufacturedCase example_case(int id, double eps) {
  if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("example_case: eps in (0,1] required");
  switch (id) {
    case 1: return example_case_1(eps);
    case 2: return example_case_2(eps);
    case 3: return example_case_3(eps);
    default: throw std::invalid_argument("example_case: id must be 1, 2 or 3");
  }
}

}  // namespace ipvem
