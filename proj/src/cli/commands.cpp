#include "fmmbem/cli/commands.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numbers>
#include <sstream>

#include "fmmbem/bem/report.hpp"
#include "fmmbem/bem/solver.hpp"
#include "fmmbem/errors.hpp"
#include "fmmbem/geom/io.hpp"
#include "fmmbem/geom/replicate.hpp"

namespace fmmbem::cli {

namespace fs = std::filesystem;

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// key = value lines ('#' comments, optional quotes, '_' and '-' interchangeable)
// fill every option of `app` that was not given on the command line.
void merge_config(CLI::App* app, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open config file " + path);
  std::string line;
  for (int lineno = 1; std::getline(in, line); ++lineno) {
    line = trim(line.substr(0, line.find('#')));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw InputError(path + ":" + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    std::replace(key.begin(), key.end(), '_', '-');
    if (value.size() >= 2 && (value.front() == '"' || value.front() == '\'') && value.back() == value.front())
      value = value.substr(1, value.size() - 2);
    if (key == "config") throw InputError(path + ":" + std::to_string(lineno) + ": config files cannot nest");
    CLI::Option* opt = app->get_option_no_throw("--" + key);
    if (opt == nullptr) throw InputError(path + ":" + std::to_string(lineno) + ": unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    std::istringstream words(value);
    std::string w;
    while (words >> w) opt->add_result(w);
    try {
      opt->run_callback();
    } catch (const CLI::Error& e) {
      throw InputError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot write " + path.string());
  f << text;
  if (!f) throw InputError("failed writing " + path.string());
}

struct SolverFlags {
  double eps_in = 4.0, eps_out = 80.0;
  std::string method = "bem";
  int order = 8;
  int ncrit = octree::kDefaultNcrit;
  double tol = 1e-5;
  int restart = 30, max_iter = 200;
  int threads = 1;
  std::string self_term = "curvature";
  std::string m2l = "auto";
  bool direct = false;

  void add(CLI::App* app) {
    app->add_option("--eps-in", eps_in, "Solute permittivity")->capture_default_str();
    app->add_option("--eps-out", eps_out, "Solvent permittivity")->capture_default_str();
    app->add_option("--method", method, "bem, cfa, p or lb")->capture_default_str();
    app->add_option("-p,--order", order, "Expansion order")->capture_default_str();
    app->add_option("--ncrit", ncrit, "Maximum points per leaf")->capture_default_str();
    app->add_option("--tol", tol, "GMRES relative residual tolerance")->capture_default_str();
    app->add_option("--restart", restart, "GMRES restart length")->capture_default_str();
    app->add_option("--max-iter", max_iter, "GMRES iteration limit")->capture_default_str();
    app->add_option("--threads", threads, "Worker threads for the N-body sums")->capture_default_str();
    app->add_option("--self-term", self_term, "K' diagonal: curvature or flat")->capture_default_str();
    app->add_option("--m2l", m2l, "auto, rotated or plain")->capture_default_str();
    app->add_flag("--direct", direct, "Exact direct sums instead of the FMM");
  }

  geom::DielectricModel dielectric() const {
    geom::DielectricModel d{eps_in, eps_out};
    d.validate();
    return d;
  }

  bem::SolveOptions options() const {
    bem::SolveOptions o;
    o.gmres = {tol, restart, max_iter};
    o.operators.fmm.order = order;
    o.operators.fmm.ncrit = ncrit;
    o.operators.fmm.threads = threads;
    if (m2l == "auto") o.operators.fmm.m2l = fmm::M2LMode::automatic;
    else if (m2l == "rotated") o.operators.fmm.m2l = fmm::M2LMode::rotated;
    else if (m2l == "plain") o.operators.fmm.m2l = fmm::M2LMode::plain;
    else throw InputError("--m2l must be auto, rotated or plain");
    if (self_term == "curvature") o.operators.self_term = bem::SelfTerm::curvature;
    else if (self_term == "flat") o.operators.self_term = bem::SelfTerm::flat;
    else throw InputError("--self-term must be curvature or flat");
    o.operators.use_fmm = !direct;
    o.validate();
    return o;
  }
};

struct InputFlags {
  std::string prefix, vert, face, pqr;
  bool need_pqr = true;

  void add(CLI::App* app, const std::string& what) {
    app->add_option("--prefix", prefix, "Read PREFIX.vert, PREFIX.face, PREFIX.pqr" + what);
    app->add_option("--vert", vert, "MSMS vertex file");
    app->add_option("--face", face, "MSMS face file");
    app->add_option("--pqr", pqr, "PQR charge file");
  }

  void resolve() {
    if (!prefix.empty()) {
      if (vert.empty()) vert = prefix + ".vert";
      if (face.empty()) face = prefix + ".face";
      if (pqr.empty()) pqr = prefix + ".pqr";
    }
    if (vert.empty() || face.empty()) throw InputError("a mesh is required (--vert and --face, or --prefix)");
    if (need_pqr && pqr.empty()) throw InputError("a charge file is required (--pqr, or --prefix)");
  }
};

geom::MolecularSystem load_system(const std::string& vert, const std::string& face, const std::string& pqr,
                                  const geom::DielectricModel& eps, std::ostream& err) {
  auto mesh = geom::load_msms(vert, face);
  if (!geom::check_orientation(mesh).outward) {
    err << "warning: " << vert << " is wound inward; flipping\n";
    geom::flip_orientation(mesh);
  }
  auto charges = geom::load_pqr(pqr);
  const auto outside = geom::charges_outside(mesh, charges);
  if (!outside.empty())
    err << "warning: " << outside.size() << " charge(s) lie outside the surface (first: index " << outside[0]
        << ")\n";
  return geom::make_system(std::move(mesh), std::move(charges), eps);
}

// --- solve -----------------------------------------------------------------

struct SolveCommand {
  InputFlags input;
  SolverFlags solver;
  std::string output, sigma_csv;

  void add(CLI::App* app) {
    input.add(app, "");
    solver.add(app);
    app->add_option("-o,--output", output, "JSON report path (default: stdout)");
    app->add_option("--sigma-csv", sigma_csv, "Write the induced charge per panel as CSV");
  }

  int run(std::ostream& out, std::ostream& err) {
    input.resolve();
    const auto opts = solver.options();
    const auto method = bem::parse_method(solver.method);
    const auto sys = load_system(input.vert, input.face, input.pqr, solver.dielectric(), err);
    const auto r = bem::solve(sys, method, opts);
    const auto report = bem::solve_report(r, sys.panels.size(), sys.charges.size(), solver.order);
    if (!sigma_csv.empty()) {
      std::ostringstream csv;
      bem::write_sigma_csv(csv, sys.panels, r.sigma);
      write_text(sigma_csv, csv.str());
    }
    if (output.empty()) {
      out << report.dump(2) << '\n';
    } else {
      write_text(output, report.dump(2) + "\n");
      out << "dG = " << r.dG_kcal_mol << " kcal/mol (" << bem::method_name(method) << ", " << sys.panels.size()
          << " panels)\n";
    }
    if (!r.converged) {
      err << "GMRES did not reach tolerance " << opts.gmres.tolerance << " in " << r.iterations << " iterations\n";
      return kNotConverged;
    }
    return kSuccess;
  }
};

// --- bind ------------------------------------------------------------------

struct BindCommand {
  std::string complex, protein, ligand;
  SolverFlags solver;
  std::string output;

  void add(CLI::App* app) {
    app->add_option("--complex", complex, "Prefix of the complex .vert/.face/.pqr")->required();
    app->add_option("--protein", protein, "Prefix of the first partner")->required();
    app->add_option("--ligand", ligand, "Prefix of the second partner")->required();
    solver.add(app);
    app->add_option("-o,--output", output, "JSON report path (default: stdout)");
  }

  int run(std::ostream& out, std::ostream& err) {
    const auto opts = solver.options();
    const auto method = bem::parse_method(solver.method);
    const auto eps = solver.dielectric();
    std::vector<geom::MolecularSystem> systems;
    for (const auto* p : {&complex, &protein, &ligand})
      systems.push_back(load_system(*p + ".vert", *p + ".face", *p + ".pqr", eps, err));

    const char* names[3] = {"complex", "protein", "ligand"};
    std::vector<bem::SolveResult> results;
    nlohmann::json report;
    for (int s = 0; s < 3; ++s) {
      results.push_back(bem::solve(systems[s], method, opts));
      if (!results.back().converged) {
        err << names[s] << " solve did not converge; aborting\n";
        return kNotConverged;
      }
      report[names[s]] =
          bem::solve_report(results.back(), systems[s].panels.size(), systems[s].charges.size(), solver.order);
    }
    const auto b = bem::binding_energy(results[0], results[1], results[2]);
    report["method"] = std::string(bem::method_name(method));
    report["eps_in"] = eps.eps_in;
    report["eps_out"] = eps.eps_out;
    report["order_p"] = solver.order;
    report["dG_complex_kcal_mol"] = results[0].dG_kcal_mol;
    report["dG_protein_kcal_mol"] = results[1].dG_kcal_mol;
    report["dG_ligand_kcal_mol"] = results[2].dG_kcal_mol;
    report["ddG_internal"] = b.ddG_internal;
    report["ddG_kcal_mol"] = results[0].dG_kcal_mol - results[1].dG_kcal_mol - results[2].dG_kcal_mol;
    if (output.empty()) {
      out << report.dump(2) << '\n';
    } else {
      write_text(output, report.dump(2) + "\n");
      out << "ddG = " << report["ddG_kcal_mol"].get<double>() << " kcal/mol\n";
    }
    return kSuccess;
  }
};

// --- bench-fmm -------------------------------------------------------------

struct BenchCommand {
  BenchOptions opts;
  std::string m2l = "auto";
  std::string output;

  void add(CLI::App* app) {
    app->add_option("-n,--n", opts.sizes, "Number of points (repeatable or comma separated)")
        ->delimiter(',')
        ->capture_default_str();
    app->add_option("-p,--order", opts.fmm.order, "Expansion order")->capture_default_str();
    app->add_option("--ncrit", opts.fmm.ncrit, "Maximum points per leaf")->capture_default_str();
    app->add_option("--threads", opts.fmm.threads, "Worker threads")->capture_default_str();
    app->add_option("--m2l", m2l, "auto, rotated or plain")->capture_default_str();
    app->add_option("--distribution", opts.distribution, "cube or sphere")->capture_default_str();
    app->add_option("--seed", opts.seed, "Random seed")->capture_default_str();
    app->add_option("--check", opts.check, "Targets checked against the direct sum (0: off)")
        ->capture_default_str();
    app->add_option("--repeat", opts.repeat, "Report the fastest of this many runs")->capture_default_str();
    app->add_option("-o,--output", output, "CSV path (default: stdout)");
  }

  int run(std::ostream& out, std::ostream&) {
    if (m2l == "auto") opts.fmm.m2l = fmm::M2LMode::automatic;
    else if (m2l == "rotated") opts.fmm.m2l = fmm::M2LMode::rotated;
    else if (m2l == "plain") opts.fmm.m2l = fmm::M2LMode::plain;
    else throw InputError("--m2l must be auto, rotated or plain");
    const auto records = bench_fmm(opts);
    std::ostringstream csv;
    write_bench_csv(csv, records);
    if (output.empty()) out << csv.str();
    else write_text(output, csv.str());
    return kSuccess;
  }
};

// --- mesh-sphere -----------------------------------------------------------

struct MeshSphereCommand {
  double radius = 1.0;
  int subdiv = 3;
  int segments = 0, bands = 0;
  std::vector<double> center{0.0, 0.0, 0.0};
  std::optional<double> charge;
  double offset = 0.0;
  std::string out_prefix;

  void add(CLI::App* app) {
    app->add_option("--radius", radius, "Sphere radius")->capture_default_str();
    app->add_option("--subdiv", subdiv, "Icosphere subdivision level (20 * 4^s panels)")->capture_default_str();
    app->add_option("--segments", segments, "Latitude-longitude mesh: cells per band");
    app->add_option("--bands", bands, "Latitude-longitude mesh: number of bands");
    app->add_option("--center", center, "Centre x y z")->expected(3);
    app->add_option("--charge", charge, "Also write PREFIX.pqr with this charge inside the sphere");
    app->add_option("--offset", offset, "Charge offset from the centre along x")->capture_default_str();
    app->add_option("--out", out_prefix, "Output prefix")->required();
  }

  int run(std::ostream& out, std::ostream&) {
    const Vec3 c{center[0], center[1], center[2]};
    const bool uv = segments > 0 || bands > 0;
    const auto mesh = uv ? geom::uv_sphere(radius, segments, bands, c) : geom::icosphere(radius, subdiv, c);
    if (charge && !(std::abs(offset) < radius)) throw InputError("--offset must lie inside the sphere");
    geom::write_msms(mesh, out_prefix + ".vert", out_prefix + ".face");
    if (charge) geom::write_pqr({{c + Vec3{offset, 0.0, 0.0}, *charge, radius}}, out_prefix + ".pqr");
    out << mesh.num_triangles() << " faces, " << mesh.num_vertices() << " vertices\n";
    return kSuccess;
  }
};

// --- replicate -------------------------------------------------------------

struct ReplicateCommand {
  InputFlags input;
  int nx = 1, ny = 1, nz = 1;
  double spacing = 0.0;
  std::uint64_t seed = 1;
  std::string out_prefix;

  void add(CLI::App* app) {
    input.add(app, "");
    app->add_option("--nx", nx)->capture_default_str();
    app->add_option("--ny", ny)->capture_default_str();
    app->add_option("--nz", nz)->capture_default_str();
    app->add_option("--spacing", spacing, "Grid spacing (default: 1.5 bounding-sphere diameters)");
    app->add_option("--seed", seed, "Random seed for the copy rotations")->capture_default_str();
    app->add_option("--out", out_prefix, "Output prefix")->required();
  }

  int run(std::ostream& out, std::ostream& err) {
    input.resolve();
    if (nx < 1 || ny < 1 || nz < 1) throw InputError("--nx, --ny and --nz must be >= 1");
    const auto sys = load_system(input.vert, input.face, input.pqr, {}, err);
    const double s = spacing > 0.0 ? spacing : 3.0 * geom::bounding_sphere(sys.mesh).radius;
    const auto rep = geom::replicate_grid(sys, nx, ny, nz, s, seed);
    geom::write_msms(rep.mesh, out_prefix + ".vert", out_prefix + ".face");
    geom::write_pqr(rep.charges, out_prefix + ".pqr");
    out << rep.mesh.num_triangles() << " panels, " << rep.charges.size() << " charges\n";
    return kSuccess;
  }
};

}  // namespace

void bench_points(std::size_t n, const std::string& distribution, std::uint64_t seed, std::vector<Vec3>& points,
                  std::vector<double>& weights) {
  geom::UniformStream u(seed);
  points.resize(n);
  weights.resize(n);
  if (distribution == "cube") {
    for (auto& p : points) p = {u.next(), u.next(), u.next()};
  } else if (distribution == "sphere") {
    for (auto& p : points) {
      const double z = 2.0 * u.next() - 1.0, phi = 2.0 * std::numbers::pi * u.next();
      const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
      p = {s * std::cos(phi), s * std::sin(phi), z};
    }
  } else {
    throw InputError("--distribution must be cube or sphere");
  }
  for (auto& w : weights) w = 2.0 * u.next() - 1.0;
}

std::vector<BenchRecord> bench_fmm(const BenchOptions& options) {
  options.fmm.validate();
  if (options.repeat < 1) throw InputError("--repeat must be >= 1");
  std::vector<BenchRecord> records;
  for (const std::size_t n : options.sizes) {
    if (n < 1) throw InputError("bench sizes must be >= 1");
    std::vector<Vec3> pts;
    std::vector<double> w;
    bench_points(n, options.distribution, options.seed, pts, w);
    BenchRecord rec{n, options.fmm.order, options.fmm.ncrit, options.fmm.threads, {}, std::nullopt};
    fmm::FieldResult best;
    for (int r = 0; r < options.repeat; ++r) {
      auto res = fmm::evaluate({pts, w}, {pts, {}}, options.fmm);
      if (r == 0 || res.timings.total < best.timings.total) best = std::move(res);
    }
    rec.timings = best.timings;
    if (options.check > 0) {
      // Partial Fisher-Yates draw of distinct targets.
      const std::size_t m = std::min(options.check, n);
      std::vector<std::size_t> idx(n);
      for (std::size_t i = 0; i < n; ++i) idx[i] = i;
      geom::UniformStream u(options.seed ^ 0x9e3779b97f4a7c15ULL);
      for (std::size_t i = 0; i < m; ++i) {
        const std::size_t j = i + std::min(n - i - 1, static_cast<std::size_t>(u.next() * (n - i)));
        std::swap(idx[i], idx[j]);
      }
      idx.resize(m);
      std::sort(idx.begin(), idx.end());
      std::vector<Vec3> tp(m);
      std::vector<double> approx(m);
      for (std::size_t i = 0; i < m; ++i) {
        tp[i] = pts[idx[i]];
        approx[i] = best.potential[idx[i]];
      }
      const auto exact = fmm::direct_evaluate({pts, w}, {tp, {}}, true, options.fmm.threads);
      rec.rel_l2_err = fmm::relative_l2_error(approx, exact.potential);
    }
    records.push_back(rec);
  }
  return records;
}

void write_bench_csv(std::ostream& out, std::span<const BenchRecord> records) {
  const auto old = out.precision(6);
  out << "N,p,ncrit,threads,t_tree,t_upward,t_m2l,t_p2p,t_total,rel_l2_err\n";
  for (const auto& r : records) {
    out << r.n << ',' << r.p << ',' << r.ncrit << ',' << r.threads << ',' << r.timings.tree << ','
        << r.timings.upward << ',' << r.timings.m2l << ',' << r.timings.p2p << ',' << r.timings.total << ',';
    if (r.rel_l2_err) out << *r.rel_l2_err;
    out << '\n';
  }
  out.precision(old);
}

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Boundary-element electrostatics with a fast multipole method"};
  app.name("fmmbem");
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Help for every subcommand");

  SolveCommand solve;
  BindCommand bind;
  BenchCommand bench;
  MeshSphereCommand mesh;
  ReplicateCommand replicate;
  struct Entry {
    CLI::App* app;
    std::function<int()> run;
  };
  std::vector<Entry> entries;
  std::string config;
  auto add = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    cmd.add(sub);
    sub->add_option("--config", config, "key = value file; command-line flags take precedence");
    entries.push_back({sub, [&cmd, &out, &err] { return cmd.run(out, err); }});
  };
  add("solve", "Solvation energy of one molecule", solve);
  add("bind", "Rigid binding energy from complex, protein and ligand", bind);
  add("bench-fmm", "Time the FMM on random points; CSV output", bench);
  add("mesh-sphere", "Write a sphere mesh (and optionally one charge)", mesh);
  add("replicate", "Tile randomly rotated copies of a molecule on a grid", replicate);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kSuccess : kInputError;
  }

  try {
    for (auto& e : entries) {
      if (!e.app->parsed()) continue;
      if (!config.empty()) merge_config(e.app, config);
      return e.run();
    }
  } catch (const NumericalError& e) {
    err << "error: " << e.what() << '\n';
    return kNotConverged;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kInputError;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  std::vector<const char*> argv{"fmmbem"};
  for (const auto& a : args) argv.push_back(a.c_str());
  return run(static_cast<int>(argv.size()), argv.data(), out, err);
}

}  // namespace fmmbem::cli
