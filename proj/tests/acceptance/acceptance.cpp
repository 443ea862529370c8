// Acceptance checks. One line per criterion: PASS or FAIL, then the measured
// values. Exit status is the number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "fmmbem/bem/kirkwood.hpp"
#include "fmmbem/bem/operators.hpp"
#include "fmmbem/bem/solver.hpp"
#include "fmmbem/cli/commands.hpp"
#include "fmmbem/fmm/fmm.hpp"
#include "fmmbem/fmm/p2p.hpp"
#include "fmmbem/fmm/rotation.hpp"
#include "fmmbem/geom/mesh.hpp"
#include "fmmbem/geom/replicate.hpp"
#include "fmmbem/parallel.hpp"

using namespace fmmbem;
using Clock = std::chrono::steady_clock;

namespace {

constexpr double kBorn = -0.0094500;

double since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, bool ok, const std::string& what, const std::string& detail) {
  std::printf("%s  criterion %2d  %s | %s\n", ok ? "PASS" : "FAIL", id, what.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

void guarded(int id, const std::string& what, const std::function<void()>& body) {
  try {
    body();
  } catch (const std::exception& e) {
    report(id, false, what, std::string("exception: ") + e.what());
  }
}

struct Points {
  std::vector<Vec3> x;
  std::vector<double> w;
};

Points cube(std::size_t n, std::uint64_t seed) {
  Points p;
  cli::bench_points(n, "cube", seed, p.x, p.w);
  return p;
}

geom::MolecularSystem sphere(int subdiv, Vec3 q) {
  return geom::make_system(geom::icosphere(1.0, subdiv), {{q, 1.0, 1.0}}, {4, 80});
}

// 1. FMM accuracy
void criterion1() {
  const auto t0 = Clock::now();
  const auto p = cube(10000, 1);
  const auto ref = fmm::direct_evaluate({p.x, p.w}, {p.x, {}}, true);
  std::vector<double> errs;
  double t10 = 0.0;
  for (int order : {4, 6, 8, 10, 12}) {
    fmm::FmmConfig cfg;
    cfg.order = order;
    cfg.ncrit = 64;
    const auto t = Clock::now();
    const auto r = fmm::evaluate({p.x, p.w}, {p.x, {}}, cfg);
    if (order == 10) t10 = since(t);
    errs.push_back(fmm::relative_l2_error(r.potential, ref.potential));
  }
  bool monotone = true;
  for (std::size_t i = 1; i < errs.size(); ++i) monotone = monotone && errs[i] <= errs[i - 1];
  const double total = since(t0);
  report(1, errs[3] <= 1.5e-4 && monotone && total < 30.0, "FMM accuracy N=1e4 p=10 <= 1.5e-4, monotone in p, < 30 s",
         fmt("err p=4..12: %.2e %.2e %.2e %.2e %.2e; p=10 evaluate %.3f s; criterion total %.1f s", errs[0], errs[1],
             errs[2], errs[3], errs[4], t10, total));
}

// 2. FMM linear complexity
void criterion2() {
  fmm::FmmConfig cfg;
  cfg.order = 8;
  cfg.ncrit = 64;
  fmm::rotation_table(cfg.order);  // process-wide table built once, outside the timings
  auto best_fmm = [&](std::size_t n) {
    const auto p = cube(n, 2);
    double best = 1e300;
    for (int r = 0; r < 3; ++r) {
      const auto t = Clock::now();
      fmm::evaluate({p.x, p.w}, {p.x, {}}, cfg);
      best = std::min(best, since(t));
    }
    return best;
  };
  auto best_direct = [&](std::size_t n) {
    const auto p = cube(n, 3);
    double best = 1e300;
    for (int r = 0; r < 3; ++r) {
      const auto t = Clock::now();
      fmm::direct_evaluate({p.x, p.w}, {p.x, {}}, true);
      best = std::min(best, since(t));
    }
    return best;
  };
  const double f1 = best_fmm(100000), f4 = best_fmm(400000);
  const double d1 = best_direct(5000), d4 = best_direct(20000);
  const double rf = f4 / f1, rd = d4 / d1;
  report(2, rf <= 5.5 && rd >= 14.0, "FMM t(4e5)/t(1e5) <= 5.5 at p=8; direct subsets ratio >= 14",
         fmt("FMM %.3f s -> %.3f s, ratio %.2f; direct N=5e3 %.3f s -> N=2e4 %.3f s, ratio %.2f (best of 3)", f1, f4,
             rf, d1, d4, rd));
}

// 3. Born sphere energy and mesh convergence
void criterion3() {
  const auto t0 = Clock::now();
  std::vector<double> dg, err;
  bool converged = true;
  for (int sd : {3, 4, 5}) {
    const auto r = bem::solve(sphere(sd, {0, 0, 0}), bem::Method::bem, {});
    converged = converged && r.converged;
    dg.push_back(r.dG_internal);
    err.push_back(std::abs(r.dG_internal - kBorn) / std::abs(kBorn));
  }
  const double total = since(t0);
  const bool ok = err[1] <= 0.01 && err[0] > err[1] && err[1] > err[2] && converged && total < 60.0;
  report(3, ok, "Born sphere BEM subdiv 4 within 1% of -0.0094500, error decreasing 3->4->5, < 60 s",
         fmt("dG = %.7f %.7f %.7f; rel err %.3f%% %.3f%% %.3f%%; %.1f s", dg[0], dg[1], dg[2], 100 * err[0],
             100 * err[1], 100 * err[2], total));
}

// 4. CFA exactness on uniform normal fields
void criterion4() {
  const auto sys = sphere(4, {0, 0, 0});
  const auto b = bem::solve(sys, bem::Method::bem, {});
  const auto c = bem::solve(sys, bem::Method::cfa, {});
  const double rel = std::abs(c.dG_internal - b.dG_internal) / std::abs(b.dG_internal);
  report(4, rel <= 0.005, "|dG_CFA - dG_BEM| / |dG_BEM| <= 0.5% on the Born fixture",
         fmt("BEM %.7f, CFA %.7f, rel diff %.4f%%", b.dG_internal, c.dG_internal, 100 * rel));
}

// 5. BIBEE bounds, off-centre charge
void criterion5() {
  const auto kw = bem::kirkwood_energy(1.0, 0.5, 1.0, {4, 80}, 200);
  const auto sys = sphere(5, {0.5, 0, 0});
  const auto b = bem::solve(sys, bem::Method::bem, {});
  const auto c = bem::solve(sys, bem::Method::cfa, {});
  const auto l = bem::solve(sys, bem::Method::lb, {});
  const double rel = std::abs(b.dG_internal - kw.dG_internal) / std::abs(kw.dG_internal);
  const bool ok = l.dG_internal <= kw.dG_internal && kw.dG_internal <= c.dG_internal && rel <= 0.02 && kw.converged;
  report(5, ok, "d=0.5a: dG_LB <= dG_Kirkwood <= dG_CFA; BEM within 2% of Kirkwood at subdiv 5",
         fmt("LB %.6f <= Kirkwood %.7f <= CFA %.7f; BEM %.7f (%.3f%%)", l.dG_internal, kw.dG_internal, c.dG_internal,
             b.dG_internal, 100 * rel));
}

// 6. Operator oracle equivalence
void criterion6() {
  const auto sys = geom::make_system(geom::uv_sphere(1.0, 25, 11),
                                     {{{0.1, -0.2, 0.3}, 1.0}, {{-0.4, 0.1, 0.0}, -0.5}, {{0.0, 0.5, -0.2}, 0.25}});
  const auto B = bem::dense_B(sys.panels, sys.charges, sys.dielectric);
  const auto A = bem::dense_A(sys.panels, sys.dielectric, bem::SelfTerm::curvature);
  const auto C = bem::dense_C(sys.panels, sys.charges);
  geom::UniformStream u(6);
  std::vector<double> sigma(sys.panels.size()), q{1.0, -0.5, 0.25};
  for (auto& s : sigma) s = 2 * u.next() - 1;
  // Modes: FMM with expansions forced on every far pair, default FMM, direct.
  double worst[3] = {0, 0, 0};
  for (int mode = 0; mode < 3; ++mode) {
    bem::OperatorOptions o;
    o.use_fmm = mode < 2;
    o.fmm.order = 10;
    o.fmm.adaptive_direct = mode != 0;
    const bem::OperatorContext ctx(sys, o);
    worst[mode] = std::max({fmm::relative_l2_error(ctx.apply_A(sigma), A.multiply(sigma)),
                            fmm::relative_l2_error(ctx.apply_B(q), B.multiply(q)),
                            fmm::relative_l2_error(ctx.apply_C(sigma), C.multiply(sigma))});
  }
  report(6, sys.panels.size() == 500 && worst[0] <= 1e-4 && worst[1] <= 1e-4 && worst[2] <= 1e-12,
         "dense A, B, C vs matrix-free on 500 panels: <= 1e-4 with FMM p=10, <= 1e-12 direct",
         fmt("%zu panels; worst rel diff FMM (expansions forced) %.2e, FMM (default) %.2e, direct %.2e",
             sys.panels.size(), worst[0], worst[1], worst[2]));
}

// 7. GMRES behaviour
void criterion7() {
  const auto r = bem::solve(sphere(4, {0, 0, 0}), bem::Method::bem, {});
  bool monotone = true;
  for (std::size_t c = 0; c < r.cycle_starts.size(); ++c) {
    const std::size_t b = r.cycle_starts[c];
    const std::size_t e = c + 1 < r.cycle_starts.size() ? r.cycle_starts[c + 1] : r.residuals.size();
    for (std::size_t i = b + 1; i < e; ++i) monotone = monotone && r.residuals[i] <= r.residuals[i - 1];
  }
  std::string hist;
  for (double v : r.residuals) hist += fmt(" %.1e", v);
  report(7, r.converged && r.residuals.back() <= 1e-5 && r.iterations <= 20 && monotone,
         "GMRES on the Born fixture: 1e-5 in <= 20 iterations, residuals non-increasing per cycle",
         fmt("%d iterations, residuals%s", r.iterations, hist.c_str()));
}

// 8. Replicated-molecule arrays
void criterion8() {
  const auto base = geom::make_system(geom::icosphere(1.0, 1), {{{0, 0, 0}, 1.0, 1.0}}, {4, 80});
  auto timed = [&](int n, bem::SolveResult& out) {
    const auto sys = geom::replicate_grid(base, n, n, n, 3.0, 8);
    bem::SolveOptions o;
    o.operators.fmm.threads = 1;
    const auto t = Clock::now();
    out = bem::solve(sys, bem::Method::cfa, o);
    return std::pair{since(t), sys.panels.size()};
  };
  bem::SolveResult r5, r10;
  const auto [t5, n5] = timed(5, r5);
  const auto [t10, n10] = timed(10, r10);
  const double ratio = t10 / t5;
  report(8, n10 == 80000 && t10 < 600.0 && ratio <= 10.0,
         "10x10x10 icosphere array (80,000 panels) CFA solve < 10 min; 5^3 -> 10^3 time ratio <= 10",
         fmt("%zu panels %.2f s, %zu panels %.2f s, ratio %.2f; dG(10^3) = %.3f kcal/mol", n5, t5, n10, t10, ratio,
             r10.dG_kcal_mol));
}

// 9. Thread scaling and determinism
void criterion9() {
  const auto p = cube(1000000, 9);
  fmm::FmmConfig cfg;
  cfg.order = 8;
  fmm::rotation_table(cfg.order);
  auto run = [&](int threads, double& seconds) {
    fmm::FmmConfig c = cfg;
    c.threads = threads;
    const auto t = Clock::now();
    auto r = fmm::evaluate({p.x, p.w}, {p.x, {}}, c);
    seconds = since(t);
    return r;
  };
  double t1 = 0, t8 = 0, tmp = 0;
  const auto r1 = run(1, t1);
  const auto r8 = run(8, t8);
  const auto r8b = run(8, tmp);
  const auto r3 = run(3, tmp);
  const bool identical = r1.potential == r8.potential && r8.potential == r8b.potential &&
                         r3.potential == r1.potential && r1.gradient == r8.gradient;
  const double speedup = t1 / t8;
  report(9, speedup >= 3.0 && identical, "N=1e6 p=8: >= 3x speedup at 8 threads; deterministic bit-identical",
         fmt("1 thread %.2f s, 8 threads %.2f s, speedup %.2f (hardware threads: %d); bit-identical across 1/3/8 "
             "threads and reruns: %s",
             t1, t8, speedup, hardware_threads(), identical ? "yes" : "no"));
}

// 10. Binding pipeline
void criterion10() {
  const bem::SolveOptions o;
  const auto protein_mesh = geom::icosphere(1.0, 3);
  const geom::ChargeSet protein_q{{{0.2, 0.1, 0}, 1.0, 1.0}, {{-0.3, 0, 0.2}, -0.5, 1.0}};
  const auto protein = geom::make_system(protein_mesh, protein_q);
  const auto ligand0 = geom::make_system(geom::icosphere(0.5, 2, {5, 0, 0}), {{{5, 0, 0}, 0.0, 0.5}});
  const auto rp = bem::solve(protein, bem::Method::bem, o);
  const auto rc = bem::solve(protein, bem::Method::bem, o);
  const auto rl = bem::solve(ligand0, bem::Method::bem, o);
  const auto zero = bem::binding_energy(rc, rp, rl);
  const bool ok_zero = std::abs(zero.ddG_internal) <= 10 * o.gmres.tolerance * std::abs(rp.dG_internal);

  // Two unit spheres 100 radii apart.
  const Vec3 shift{100, 0, 0};
  auto a = geom::icosphere(1.0, 3);
  auto b = geom::icosphere(1.0, 3, shift);
  geom::SurfaceMesh both = a;
  const auto off = static_cast<std::uint32_t>(a.vertices.size());
  both.vertices.insert(both.vertices.end(), b.vertices.begin(), b.vertices.end());
  both.vertex_normals.insert(both.vertex_normals.end(), b.vertex_normals.begin(), b.vertex_normals.end());
  for (auto t : b.triangles) both.triangles.push_back({t[0] + off, t[1] + off, t[2] + off});
  const geom::PointCharge qa{{0.3, 0, 0}, 1.0, 1.0}, qb{shift + Vec3{-0.3, 0, 0}, -1.0, 1.0};
  const auto sa = bem::solve(geom::make_system(a, {qa}), bem::Method::bem, o);
  const auto sb = bem::solve(geom::make_system(b, {qb}), bem::Method::bem, o);
  const auto sc = bem::solve(geom::make_system(both, {qa, qb}), bem::Method::bem, o);
  const auto far = bem::binding_energy(sc, sa, sb);
  const bool ok_far = std::abs(far.ddG_internal) <= 0.01 * std::abs(sa.dG_internal);
  // Solvent screening of the pair's Coulomb energy, the leading far-field term.
  const double R = norm(qb.position - qa.position);
  const double screened = qa.charge * qb.charge / (4 * std::numbers::pi * R) * (1 / 80.0 - 1 / 4.0);
  report(10, ok_zero && ok_far,
         "binding: zero-charge ligand |ddG| <= 10 tol |dG_protein|; spheres 100a apart |ddG| <= 1% |dG_protein|",
         fmt("zero ligand ddG = %.2e (bound %.2e); far pair ddG = %.2e vs dG_protein %.6f (%.4f%%); "
             "screened Coulomb q1 q2 (1/eps_out - 1/eps_in) / (4 pi R) = %.2e",
             zero.ddG_internal, 10 * o.gmres.tolerance * std::abs(rp.dG_internal), far.ddG_internal, sa.dG_internal,
             100 * std::abs(far.ddG_internal / sa.dG_internal), screened));
}

}  // namespace

int main() {
  std::printf("SIMD level: %s\n", fmm::simd_level_name(fmm::simd_level()));
  guarded(1, "FMM accuracy", criterion1);
  guarded(2, "FMM linear complexity", criterion2);
  guarded(3, "Born sphere energy", criterion3);
  guarded(4, "CFA exactness", criterion4);
  guarded(5, "BIBEE bounds", criterion5);
  guarded(6, "operator oracle equivalence", criterion6);
  guarded(7, "GMRES behaviour", criterion7);
  guarded(8, "replicated arrays", criterion8);
  guarded(9, "thread scaling", criterion9);
  guarded(10, "binding pipeline", criterion10);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures;
}
