// Command-line driver: convergence studies for the interior penalty virtual
// element discretization of eps^2 biharmonic - Laplace problems on polygonal
// meshes, plus mesh-generation and system-dump utilities.
#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ipvem/ipvem.hpp"

namespace {

using namespace ipvem;

struct MeshSpec {
  std::string kind;          // cvt | grid | distorted | files
  std::vector<int> sizes;    // cell counts or grid sizes
  std::vector<std::string> files;
};

MeshSpec parse_mesh_spec(const std::string& text) {
  MeshSpec spec;
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw CLI::ValidationError("--mesh", "expected kind:args, e.g. cvt:32,64,128");
  spec.kind = text.substr(0, colon);
  std::stringstream args(text.substr(colon + 1));
  std::string item;
  while (std::getline(args, item, ',')) {
    if (item.empty()) continue;
    if (spec.kind == "files") {
      spec.files.push_back(item);
    } else {
      try {
        spec.sizes.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw CLI::ValidationError("--mesh", "bad size '" + item + "'");
      }
    }
  }
  if (spec.kind != "cvt" && spec.kind != "grid" && spec.kind != "distorted" && spec.kind != "files")
    throw CLI::ValidationError("--mesh", "kind must be cvt, grid, distorted or files");
  if (spec.sizes.empty() && spec.files.empty()) throw CLI::ValidationError("--mesh", "no mesh levels given");
  return spec;
}

Polygon parse_domain(const std::string& text) {
  if (text == "unit-square") return unit_square_polygon();
  if (text == "l-shape") return l_shape_polygon();
  if (text.rfind("poly:", 0) == 0) {
    Polygon poly;
    std::stringstream pts(text.substr(5));
    std::string pair;
    while (std::getline(pts, pair, ';')) {
      const auto comma = pair.find(',');
      if (comma == std::string::npos) throw CLI::ValidationError("--domain", "expected poly:x,y;x,y;...");
      poly.emplace_back(std::stod(pair.substr(0, comma)), std::stod(pair.substr(comma + 1)));
    }
    if (poly.size() < 3) throw CLI::ValidationError("--domain", "need at least 3 vertices");
    return poly;
  }
  throw CLI::ValidationError("--domain", "unknown domain '" + text + "'");
}

std::vector<Mesh> build_meshes(const MeshSpec& spec, const Polygon& domain, std::uint64_t seed, int lloyd,
                               double delta) {
  std::vector<Mesh> meshes;
  if (spec.kind == "cvt") {
    for (int n : spec.sizes) meshes.push_back(generate_cvt_polygonal(n, domain, seed, lloyd));
  } else if (spec.kind == "grid") {
    for (int n : spec.sizes) meshes.push_back(generate_rectangle_grid(n, n));
  } else if (spec.kind == "distorted") {
    for (int n : spec.sizes) meshes.push_back(generate_distorted_grid(n, n, delta));
  } else {
    for (const auto& f : spec.files) meshes.push_back(load_mesh(f));
  }
  return meshes;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << content;
  if (!out) throw std::runtime_error("write to '" + path + "' failed");
}

std::string eps_tag(double eps) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", eps);
  std::string tag(buf);
  for (char& c : tag)
    if (c == '+' || c == '.') c = '_';
  return tag;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IPVEM solver for eps^2 biharmonic - Laplace problems on polygonal meshes"};
  app.require_subcommand(1);

  // ---- run ------------------------------------------------------------------
  auto* run = app.add_subcommand("run", "run a convergence study");
  int example = 1;
  std::vector<double> eps_list{1e-6};
  int k = 0;
  double lambda = 1.0;
  std::string mesh_spec_text = "cvt:32,64,128,256,512";
  std::uint64_t seed = 1;
  int lloyd = 200;
  double delta = 0.1;
  std::string domain_text;
  std::string out_path;
  std::string format = "markdown";
  double tol = 1e-12;
  int threads = 0;
  int field_dump_n = 0;
  std::string field_dump_path;
  run->add_option("--example", example, "manufactured case id (1, 2 or 3)")->check(CLI::Range(1, 3));
  run->add_option("--eps", eps_list, "singular perturbation parameters")->delimiter(',');
  run->add_option("--k", k, "polynomial degree (>= 2); defaults to the case recommendation");
  run->add_option("--lambda", lambda, "penalty coefficient lambda_e");
  run->add_option("--mesh", mesh_spec_text, "mesh source: cvt:N1,N2,... | grid:n1,n2,... | distorted:n1,... | files:a.txt,...");
  run->add_option("--seed", seed, "random seed for CVT generation");
  run->add_option("--lloyd", lloyd, "Lloyd iterations for CVT meshes");
  run->add_option("--delta", delta, "distortion amplitude for distorted grids");
  run->add_option("--domain", domain_text, "domain: unit-square | l-shape | poly:x,y;x,y;...");
  run->add_option("--out", out_path, "output path stem (writes <stem>.md/.csv files)");
  run->add_option("--format", format, "table file format")->check(CLI::IsMember({"csv", "markdown"}));
  run->add_option("--tol", tol, "solver tolerance");
  run->add_option("--threads", threads, "worker threads (default: IPVEM_THREADS or 1)");
  run->add_option("--field-dump", field_dump_path, "write sampled solution values (x y u) to this file");
  run->add_option("--field-dump-n", field_dump_n, "raster resolution for --field-dump (default 64)");

  // ---- mesh -----------------------------------------------------------------
  auto* meshcmd = app.add_subcommand("mesh", "generate a mesh and write it to a file");
  int cvt_n = 0;
  std::string grid_text, distorted_text;
  std::string mesh_out;
  std::string mesh_domain_text = "unit-square";
  std::uint64_t mesh_seed = 1;
  int mesh_lloyd = 200;
  double mesh_delta = 0.1;
  bool quality = false;
  meshcmd->add_option("--cvt", cvt_n, "centroidal Voronoi mesh with this many cells");
  meshcmd->add_option("--grid", grid_text, "uniform grid, nx,ny");
  meshcmd->add_option("--distorted", distorted_text, "distorted grid, nx,ny");
  meshcmd->add_option("--seed", mesh_seed, "random seed");
  meshcmd->add_option("--lloyd", mesh_lloyd, "Lloyd iterations");
  meshcmd->add_option("--delta", mesh_delta, "distortion amplitude");
  meshcmd->add_option("--domain", mesh_domain_text, "domain for CVT meshes");
  meshcmd->add_option("--out", mesh_out, "output file")->required();
  meshcmd->add_flag("--quality", quality, "print a mesh-quality summary");

  // ---- dump-system ----------------------------------------------------------
  auto* dump = app.add_subcommand("dump-system", "assemble one level and dump the matrix in coordinate format");
  int dump_example = 1;
  double dump_eps = 1e-6;
  int dump_k = 0;
  double dump_lambda = 1.0;
  std::string dump_mesh_text = "grid:1";
  std::uint64_t dump_seed = 1;
  int dump_lloyd = 200;
  double dump_delta = 0.1;
  std::string dump_out;
  dump->add_option("--example", dump_example, "manufactured case id")->check(CLI::Range(1, 3));
  dump->add_option("--eps", dump_eps, "singular perturbation parameter");
  dump->add_option("--k", dump_k, "polynomial degree");
  dump->add_option("--lambda", dump_lambda, "penalty coefficient");
  dump->add_option("--mesh", dump_mesh_text, "mesh source (single level)");
  dump->add_option("--seed", dump_seed, "random seed");
  dump->add_option("--lloyd", dump_lloyd, "Lloyd iterations");
  dump->add_option("--delta", dump_delta, "distortion amplitude");
  dump->add_option("--out", dump_out, "output file")->required();

  if (argc <= 1) {
    std::cerr << app.help();
    return 2;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp") {
      std::cout << app.help();
      return 0;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  try {
    if (run->parsed()) {
      if (k == 0) k = (example == 2) ? 3 : 2;
      if (k < 2) {
        std::cerr << "error: k >= 2 required (the local space needs degree at least 2)\n";
        return 2;
      }
      for (double eps : eps_list)
        if (!(eps > 0.0 && eps <= 1.0)) {
          std::cerr << "error: eps must lie in (0, 1]\n";
          return 2;
        }
      const MeshSpec spec = parse_mesh_spec(mesh_spec_text);
      ManufacturedCase probe = example_case(example, eps_list.front());
      const Polygon domain = domain_text.empty() ? probe.domain : parse_domain(domain_text);
      const std::vector<Mesh> meshes = build_meshes(spec, domain, seed, lloyd, delta);

      RunOptions opts;
      opts.element.k = k;
      opts.penalty.lambda = lambda;
      opts.solver.tol = tol;
      opts.threads = threads > 0 ? threads : default_thread_count();

      std::vector<ConvergenceReport> reports;
      for (double eps : eps_list) {
        ManufacturedCase mc = (example == 2) ? example_case_2(eps, domain) : example_case(example, eps);
        reports.push_back(run_convergence(mc, meshes, opts));
      }
      const std::string table = reports_to_markdown(reports);
      std::cout << "IPVEM convergence study: example " << example << ", k = " << k << ", lambda = " << lambda
                << "\n\n" << table;
      if (!out_path.empty()) {
        if (format == "markdown") {
          write_file(out_path + ".md", table);
        } else {
          std::string all;
          for (const auto& r : reports) all += report_to_csv(r);
          write_file(out_path + ".csv", all);
        }
        for (const auto& r : reports) write_file(out_path + "_eps" + eps_tag(r.epsilon) + ".csv", report_to_csv(r));
        std::cout << "\nwrote " << out_path << (format == "markdown" ? ".md" : ".csv") << " and per-eps CSV files\n";
      }
      if (!field_dump_path.empty()) {
        ManufacturedCase mc = (example == 2) ? example_case_2(eps_list.front(), domain) : example_case(example, eps_list.front());
        DofMap dm;
        std::vector<ElementOperators> ops;
        const Eigen::VectorXd u = solve_case(meshes.back(), mc, opts, &ops, &dm);
        const int n = field_dump_n > 0 ? field_dump_n : 64;
        write_file(field_dump_path, sample_field(meshes.back(), dm, ops, u, n, n));
        std::cout << "wrote field samples to " << field_dump_path << "\n";
      }
      return 0;
    }

    if (meshcmd->parsed()) {
      Mesh m;
      if (cvt_n > 0) {
        m = generate_cvt_polygonal(cvt_n, parse_domain(mesh_domain_text), mesh_seed, mesh_lloyd);
      } else if (!grid_text.empty() || !distorted_text.empty()) {
        const std::string& text = grid_text.empty() ? distorted_text : grid_text;
        const auto comma = text.find(',');
        const int nx = std::stoi(text.substr(0, comma));
        const int ny = comma == std::string::npos ? nx : std::stoi(text.substr(comma + 1));
        m = grid_text.empty() ? generate_distorted_grid(nx, ny, mesh_delta) : generate_rectangle_grid(nx, ny);
      } else {
        std::cerr << "error: one of --cvt, --grid, --distorted is required\n";
        return 2;
      }
      save_mesh(m, mesh_out);
      std::cout << "wrote " << m.num_vertices() << " vertices, " << m.num_cells() << " cells to " << mesh_out << "\n";
      if (quality) {
        const MeshQualityReport q = mesh_quality(m);
        double min_angle = 180.0, max_ratio = 0.0;
        for (double a : q.min_fan_angle_deg) min_angle = std::min(min_angle, a);
        for (double r : q.max_edge_ratio) max_ratio = std::max(max_ratio, r);
        std::cout << "quality: min fan angle " << min_angle << " deg, max edge ratio " << max_ratio << ", "
                  << q.violating_cells.size() << " cells below thresholds\n";
      }
      return 0;
    }

    if (dump->parsed()) {
      if (dump_k == 0) dump_k = (dump_example == 2) ? 3 : 2;
      const MeshSpec spec = parse_mesh_spec(dump_mesh_text);
      const ManufacturedCase mc = example_case(dump_example, dump_eps);
      const std::vector<Mesh> meshes = build_meshes(spec, mc.domain, dump_seed, dump_lloyd, dump_delta);
      const Mesh& m = meshes.front();
      const DofMap dm = build_dof_map(m, dump_k);
      ElementOptions eo;
      eo.k = dump_k;
      const auto ops = build_all_element_operators(m, make_element_rules(dump_k), eo, mc.f);
      PenaltyConfig pc;
      pc.lambda = dump_lambda;
      const LinearSystem sys = assemble_system(m, dm, ops, dump_eps, pc, mc.boundary);
      dump_system(sys, dump_out);
      std::cout << "wrote " << sys.A.nonZeros() << " coordinate entries (" << dm.size() << " DoFs) to " << dump_out
                << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
