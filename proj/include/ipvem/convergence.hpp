#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ipvem/assembly.hpp"
#include "ipvem/cases.hpp"
#include "ipvem/convergence_fwd.hpp"
#include "ipvem/dof_map.hpp"
#include "ipvem/element.hpp"

namespace ipvem {

/// Projection-based discrete energy error
///   Err = sqrt( sum_K eps^2 |u - Pi^Delta u_h|_{2,K}^2 + |u - Pi^nabla u_h|_{1,K}^2 ) / ||f||.
inline double energy_error(const Mesh& mesh, const DofMap& dm, const std::vector<ElementOperators>& ops,
                           double epsilon, const Eigen::VectorXd& u_full, const ManufacturedCase& mc) {
  const TriangleRule rule = triangle_rule(2 * dm.k + 6);
  double num = 0.0;
  double fsq = 0.0;
  const double eps2 = epsilon * epsilon;
  for (int c = 0; c < mesh.num_cells(); ++c) {
    const auto g = cell_global_dofs(mesh, dm, c);
    Eigen::VectorXd u_loc(g.size());
    for (std::size_t i = 0; i < g.size(); ++i) u_loc[static_cast<Eigen::Index>(i)] = u_full[g[i]];
    const Eigen::VectorXd cd = ops[c].P_delta * u_loc;
    const Eigen::VectorXd cn = ops[c].P_nabla * u_loc;
    const CellQuadrature q = cell_quadrature(mesh, c, rule);
    const auto& basis = ops[c].basis;
    const Eigen::VectorXd px = basis.eval(q.points, 1, 0) * cn;
    const Eigen::VectorXd py = basis.eval(q.points, 0, 1) * cn;
    const Eigen::VectorXd pxx = basis.eval(q.points, 2, 0) * cd;
    const Eigen::VectorXd pxy = basis.eval(q.points, 1, 1) * cd;
    const Eigen::VectorXd pyy = basis.eval(q.points, 0, 2) * cd;
    for (Eigen::Index i = 0; i < q.weights.size(); ++i) {
      const RefDerivatives r = mc.reference(q.points[i]);
      const double dx = r.ux - px[i], dy = r.uy - py[i];
      const double dxx = r.uxx - pxx[i], dxy = r.uxy - pxy[i], dyy = r.uyy - pyy[i];
      const double fv = mc.f(q.points[i]);
      num += q.weights[i] * (eps2 * (dxx * dxx + 2.0 * dxy * dxy + dyy * dyy) + dx * dx + dy * dy);
      fsq += q.weights[i] * fv * fv;
    }
  }
  if (!(fsq > 0.0)) throw std::runtime_error("energy_error: ||f|| vanishes");
  return std::sqrt(num) / std::sqrt(fsq);
}

/// Least-squares slope of log(Err) against log(h).
inline double fit_rate(const std::vector<double>& h, const std::vector<double>& err) {
  if (h.size() != err.size() || h.size() < 2) throw std::invalid_argument("fit_rate: need at least two levels");
  const int n = static_cast<int>(h.size());
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < n; ++i) {
    mx += std::log(h[i]);
    my += std::log(err[i]);
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < n; ++i) {
    const double dx = std::log(h[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(err[i]) - my);
  }
  if (!(sxx > 0.0)) throw std::invalid_argument("fit_rate: identical mesh sizes");
  return sxy / sxx;
}

struct RunOptions {
  PenaltyConfig penalty;
  SolveOptions solver;
  ElementOptions element;  // k is taken from here
  int threads = 1;
};

/// Assembles, solves and measures one level. Returns the full DoF vector.
inline Eigen::VectorXd solve_case(const Mesh& mesh, const ManufacturedCase& mc, const RunOptions& opts,
                                  std::vector<ElementOperators>* ops_out = nullptr, DofMap* dm_out = nullptr) {
  const ElementRules rules = make_element_rules(opts.element.k);
  const DofMap dm = build_dof_map(mesh, opts.element.k);
  auto ops = build_all_element_operators(mesh, rules, opts.element, mc.f, opts.threads);
  const LinearSystem sys = assemble_system(mesh, dm, ops, mc.epsilon, opts.penalty, mc.boundary);
  SolveOptions sopts = opts.solver;
  sopts.lambda_hint = opts.penalty.lambda;
  const ReducedSystem red = apply_boundary_conditions(sys, mesh, dm, mc.boundary, rules.lobatto);
  Eigen::VectorXd u = solve(red, sopts);
  if (ops_out) *ops_out = std::move(ops);
  if (dm_out) *dm_out = dm;
  return u;
}

inline ConvergenceReport run_convergence(const ManufacturedCase& mc, const std::vector<Mesh>& meshes,
                                         const RunOptions& opts) {
  if (meshes.empty()) throw std::invalid_argument("run_convergence: no meshes");
  ConvergenceReport report;
  report.epsilon = mc.epsilon;
  report.k = opts.element.k;
  report.case_name = mc.name;
  for (const Mesh& mesh : meshes) {
    const auto t0 = std::chrono::steady_clock::now();
    std::vector<ElementOperators> ops;
    DofMap dm;
    const Eigen::VectorXd u = solve_case(mesh, mc, opts, &ops, &dm);
    ConvergenceLevel lvl;
    lvl.n_cells = mesh.num_cells();
    lvl.h = mesh.max_diameter();
    lvl.err = energy_error(mesh, dm, ops, mc.epsilon, u, mc);
    lvl.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    report.levels.push_back(lvl);
  }
  if (report.levels.size() >= 2) {
    std::vector<double> h, e;
    for (const auto& l : report.levels) {
      h.push_back(l.h);
      e.push_back(l.err);
    }
    report.rate = fit_rate(h, e);
  }
  return report;
}

namespace detail {

inline std::string sci(double v, int prec = 16) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*e", prec, v);
  return buf;
}

}  // namespace detail

/// CSV serialization: N,h,Err,rate_running. rate_running is the consecutive
/// pairwise rate; the first level prints nan.
inline std::string report_to_csv(const ConvergenceReport& r) {
  std::ostringstream out;
  out << "N,h,Err,rate_running\n";
  for (std::size_t i = 0; i < r.levels.size(); ++i) {
    const auto& l = r.levels[i];
    double rr = std::numeric_limits<double>::quiet_NaN();
    if (i > 0) {
      const auto& p = r.levels[i - 1];
      rr = std::log(p.err / l.err) / std::log(p.h / l.h);
    }
    out << l.n_cells << ',' << detail::sci(l.h) << ',' << detail::sci(l.err) << ',' << detail::sci(rr) << '\n';
  }
  return out.str();
}

/// Markdown table with one row per report (one epsilon each), mirroring the
/// usual convergence-table layout.
inline std::string reports_to_markdown(const std::vector<ConvergenceReport>& reports) {
  if (reports.empty()) return "";
  std::ostringstream out;
  out << "| eps \\ N |";
  for (const auto& l : reports.front().levels) out << ' ' << l.n_cells << " |";
  out << " Rate |\n|---|";
  for (std::size_t i = 0; i < reports.front().levels.size(); ++i) out << "---|";
  out << "---|\n";
  for (const auto& r : reports) {
    out << "| " << detail::sci(r.epsilon, 0) << " |";
    for (const auto& l : r.levels) out << ' ' << detail::sci(l.err, 4) << " |";
    char rate[32];
    std::snprintf(rate, sizeof(rate), "%.2f", r.rate);
    out << ' ' << rate << " |\n";
  }
  return out.str();
}

/// Samples the elementwise H1 projection of a solved field on a raster; rows
/// "x y value" for the points inside the mesh.
inline std::string sample_field(const Mesh& mesh, const DofMap& dm, const std::vector<ElementOperators>& ops,
                                const Eigen::VectorXd& u_full, int nx, int ny) {
  Vec2 lo = mesh.vertices.front(), hi = lo;
  for (const Vec2& v : mesh.vertices) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  std::ostringstream out;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) {
      const Vec2 p(lo.x() + (hi.x() - lo.x()) * i / nx, lo.y() + (hi.y() - lo.y()) * j / ny);
      for (int c = 0; c < mesh.num_cells(); ++c) {
        if (!point_in_polygon(p, mesh.cell_polygon(c))) continue;
        const auto g = cell_global_dofs(mesh, dm, c);
        Eigen::VectorXd u_loc(g.size());
        for (std::size_t t = 0; t < g.size(); ++t) u_loc[static_cast<Eigen::Index>(t)] = u_full[g[t]];
        const Eigen::VectorXd cn = ops[c].P_nabla * u_loc;
        out << detail::sci(p.x()) << ' ' << detail::sci(p.y()) << ' '
            << detail::sci(ops[c].basis.value(cn, p)) << '\n';
        break;
      }
    }
  return out.str();
}

}  // namespace ipvem
