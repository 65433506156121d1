#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ipvem/mesh.hpp"

namespace ipvem {

namespace detail {

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);  // shortest round-trip form
  return std::string(buf, res.ptr);
}

}  // namespace detail

/// Plain-text mesh format, line oriented:
///   line 1: NV NC
///   NV lines: x y
///   NC lines: m i1 i2 ... im   (0-based CCW vertex indices)
/// Blank lines and '#' comments are ignored.
inline void save_mesh(const Mesh& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_mesh: cannot open '" + path + "' for writing");
  out << m.num_vertices() << ' ' << m.num_cells() << '\n';
  for (const Vec2& v : m.vertices) out << detail::format_double(v.x()) << ' ' << detail::format_double(v.y()) << '\n';
  for (const auto& loop : m.cells) {
    out << loop.size();
    for (int v : loop) out << ' ' << v;
    out << '\n';
  }
  if (!out) throw std::runtime_error("save_mesh: write to '" + path + "' failed");
}

inline Mesh load_mesh(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_mesh: cannot open '" + path + "'");
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tok;
    while (ls >> tok) tokens.push_back(tok);
  }
  std::size_t pos = 0;
  const auto next = [&]() -> const std::string& {
    if (pos >= tokens.size()) throw std::runtime_error("load_mesh: unexpected end of file in '" + path + "'");
    return tokens[pos++];
  };
  const auto to_int = [&](const std::string& s) {
    int v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw std::runtime_error("load_mesh: malformed integer '" + s + "'");
    return v;
  };
  const auto to_double = [&](const std::string& s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) throw std::runtime_error("load_mesh: malformed number '" + s + "'");
    return v;
  };
  const int nv = to_int(next());
  const int nc = to_int(next());
  if (nv < 3 || nc < 1) throw std::runtime_error("load_mesh: invalid vertex/cell counts");
  std::vector<Vec2> verts(nv);
  for (int i = 0; i < nv; ++i) {
    const double x = to_double(next());
    const double y = to_double(next());
    verts[i] = Vec2(x, y);
  }
  std::vector<std::vector<int>> cells(nc);
  for (int c = 0; c < nc; ++c) {
    const int m = to_int(next());
    if (m < 3) throw std::runtime_error("load_mesh: cell with fewer than 3 vertices");
    cells[c].resize(m);
    for (int i = 0; i < m; ++i) cells[c][i] = to_int(next());
  }
  if (pos != tokens.size()) throw std::runtime_error("load_mesh: trailing data in '" + path + "'");
  return build_topology(std::move(verts), std::move(cells));
}

}  // namespace ipvem
