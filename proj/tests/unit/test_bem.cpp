#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "fmmbem/bem/gmres.hpp"
#include "fmmbem/bem/kirkwood.hpp"
#include "fmmbem/bem/operators.hpp"
#include "fmmbem/bem/report.hpp"
#include "fmmbem/bem/solver.hpp"
#include "fmmbem/errors.hpp"

using namespace fmmbem;
using namespace fmmbem::bem;
using geom::DielectricModel;
using geom::PointCharge;

namespace {

constexpr double kBorn = -0.0094500;  // (1/(8 pi))(1/80 - 1/4), a = 1, q = 1
// kirkwood_energy(1, 0.5, 1, {4, 80}, 200), frozen.
constexpr double kKirkwoodHalf = -0.012515840426738692;

geom::MolecularSystem sphere(int subdiv, std::vector<PointCharge> q, double a = 1.0) {
  return geom::make_system(geom::icosphere(a, subdiv), std::move(q));
}

geom::MolecularSystem uv500(std::vector<PointCharge> q) {
  return geom::make_system(geom::uv_sphere(1.0, 25, 11), std::move(q));
}

OperatorOptions direct_options() {
  OperatorOptions o;
  o.use_fmm = false;
  return o;
}

OperatorOptions fmm_options(int p) {
  OperatorOptions o;
  o.fmm.order = p;
  return o;
}

double rel_l2(std::span<const double> a, std::span<const double> b) { return fmm::relative_l2_error(a, b); }

std::vector<double> dense_solve(DenseMatrix m, std::vector<double> b) {
  const std::size_t n = m.rows;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(m.data[i * n + k]) > std::abs(m.data[piv * n + k])) piv = i;
    for (std::size_t j = 0; j < n; ++j) std::swap(m.data[k * n + j], m.data[piv * n + j]);
    std::swap(b[k], b[piv]);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = m.data[i * n + k] / m.data[k * n + k];
      for (std::size_t j = k; j < n; ++j) m.data[i * n + j] -= l * m.data[k * n + j];
      b[i] -= l * b[k];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= m.data[i * n + j] * x[j];
    x[i] = s / m.data[i * n + i];
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// Operators

TEST_CASE("constants f and eps_hat") {
  const DielectricModel eps{4, 80};
  CHECK(polarization_factor(eps) == doctest::Approx(2.0 * 76.0 / 84.0));
  CHECK(eps_hat(eps) == doctest::Approx(0.95));
  // CFA identity f / (1 + f/2) = 1 - eps_in/eps_out.
  const double f = polarization_factor(eps);
  CHECK(f / (1 + f / 2) == doctest::Approx(eps_hat(eps)).epsilon(1e-15));
}

TEST_CASE("apply_B: Born field and zero charges") {
  auto sys = sphere(3, {{{0, 0, 0}, 1.0}});
  const double expected = -1.0 / (16.0 * std::numbers::pi);
  for (bool fmm : {false, true}) {
    OperatorOptions o;
    o.use_fmm = fmm;
    const OperatorContext ctx(sys, o);
    const auto en = ctx.apply_B();
    // The field is radial; the flat panel's normal is tilted slightly from it
    // and its centroid sits inside the sphere.
    for (std::size_t i = 0; i < en.size(); ++i) {
      const Vec3 c = sys.panels.centroid[i];
      const double exact = -dot(sys.panels.normal[i], c) / (4 * std::numbers::pi * 4.0 * std::pow(norm(c), 3));
      CHECK(en[i] == doctest::Approx(exact).epsilon(fmm ? 1e-6 : 1e-13));
      CHECK(en[i] == doctest::Approx(expected).epsilon(0.02));
    }
    const std::vector<double> zero(1, 0.0);
    for (double v : ctx.apply_B(zero)) CHECK(v == 0.0);
  }
}

TEST_CASE("apply_B: mirror-symmetric charges give a mirror-symmetric field") {
  const auto sys = sphere(3, {{{0.3, 0.1, 0.0}, 1.0}, {{-0.3, 0.1, 0.0}, 1.0}});
  const OperatorContext ctx(sys, direct_options());
  const auto en = ctx.apply_B();
  // Pair each panel with its x-mirror image by centroid.
  const auto& c = sys.panels.centroid;
  std::vector<std::size_t> order(c.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  auto key = [](const Vec3& v) { return std::tuple(std::round(v.x * 1e8), std::round(v.y * 1e8), std::round(v.z * 1e8)); };
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return key(c[a]) < key(c[b]); });
  std::size_t matched = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3 m{-c[i].x, c[i].y, c[i].z};
    const auto it = std::lower_bound(order.begin(), order.end(), m, [&](std::size_t a, const Vec3& v) { return key(c[a]) < key(v); });
    if (it == order.end() || norm(c[*it] - m) > 1e-9) continue;
    ++matched;
    CHECK(std::abs(en[i] - en[*it]) <= 1e-10 * std::abs(en[i]));
  }
  CHECK(matched == c.size());
}

TEST_CASE("apply_Kprime: constant density is an eigenvector with eigenvalue -1/2") {
  const auto sys = sphere(4, {});
  for (SelfTerm rule : {SelfTerm::flat, SelfTerm::curvature}) {
    OperatorOptions o;
    o.self_term = rule;
    const OperatorContext ctx(sys, o);
    const std::vector<double> one(sys.panels.size(), 1.0);
    const auto k = ctx.apply_Kprime(one);
    double worst = 0.0;
    for (double v : k) worst = std::max(worst, std::abs(v + 0.5) / 0.5);
    CHECK(worst <= (rule == SelfTerm::flat ? 0.02 : 0.005));
    const auto a = ctx.apply_A(one);
    for (double v : a) CHECK(v == doctest::Approx(1.0 + ctx.f() / 2).epsilon(0.02));
  }
}

TEST_CASE("apply_Kprime: a single panel sees nothing but its self term") {
  geom::SurfaceMesh m;
  m.vertices = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  m.triangles = {{0, 1, 2}};
  const auto sys = geom::make_system(m, {});
  OperatorOptions o;
  o.self_term = SelfTerm::flat;
  const OperatorContext ctx(sys, o);
  const std::vector<double> s{2.5};
  CHECK(ctx.apply_Kprime(s)[0] == 0.0);
}

TEST_CASE("dense oracles match the matrix-free operators on a 500-panel sphere") {
  const auto sys = uv500({{{0.1, -0.2, 0.3}, 1.0}, {{-0.4, 0.1, 0.0}, -0.5}, {{0.0, 0.5, -0.2}, 0.25}});
  REQUIRE(sys.panels.size() == 500);
  const auto B = dense_B(sys.panels, sys.charges, sys.dielectric);
  const auto A = dense_A(sys.panels, sys.dielectric, SelfTerm::curvature);
  const auto C = dense_C(sys.panels, sys.charges);
  std::mt19937_64 g(4);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<double> sigma(500), q{1.0, -0.5, 0.25};
  for (auto& s : sigma) s = u(g);
  auto forced = fmm_options(10);
  forced.fmm.adaptive_direct = false;  // every far pair through the expansions
  for (auto [opts, tol] :
       {std::pair{direct_options(), 1e-12}, std::pair{fmm_options(10), 1e-4}, std::pair{forced, 1e-4}}) {
    const OperatorContext ctx(sys, opts);
    CHECK(rel_l2(ctx.apply_B(q), B.multiply(q)) <= tol);
    CHECK(rel_l2(ctx.apply_A(sigma), A.multiply(sigma)) <= tol);
    CHECK(rel_l2(ctx.apply_C(sigma), C.multiply(sigma)) <= tol);
  }
}

TEST_CASE("apply_C: zero density and the shell theorem") {
  const auto sys = sphere(4, {{{0, 0, 0}, 1.0}});
  const OperatorContext ctx(sys, {});
  CHECK(ctx.apply_C(std::vector<double>(sys.panels.size(), 0.0))[0] == 0.0);
  const double sigma = 0.37;
  const auto phi = ctx.apply_C(std::vector<double>(sys.panels.size(), sigma));
  double exact = 0.0;
  for (std::size_t j = 0; j < sys.panels.size(); ++j)
    exact += sys.panels.area[j] * sigma / (4 * std::numbers::pi * norm(sys.panels.centroid[j]));
  CHECK(phi[0] == doctest::Approx(exact).epsilon(1e-6));
  CHECK(phi[0] == doctest::Approx(sigma * 1.0).epsilon(0.005));
}

TEST_CASE("collocation checks") {
  auto mesh = geom::icosphere(1.0, 2);
  const auto sys = geom::make_system(mesh, {{{0, 0, 0}, 1.0}});
  auto on_centroid = sys;
  on_centroid.charges.push_back({sys.panels.centroid[17], 1.0});
  CHECK_THROWS_AS(OperatorContext(on_centroid, {}), GeometryError);
  auto dup = sys;
  dup.panels.centroid[40] = dup.panels.centroid[3];
  CHECK_THROWS_AS(OperatorContext(dup, {}), GeometryError);
}

TEST_CASE("second-kind structure: spectral radius of K' on a sphere") {
  // Power iteration on the dense K'. Its spectral radius bounds every
  // eigenvalue of A = I - f K' to the disc around 1 of radius f * rho.
  const auto sys = sphere(3, {});
  const auto K = dense_Kprime(sys.panels, SelfTerm::curvature);
  std::vector<double> v(K.rows, 1.0);
  v[0] = 2.0;  // not exactly the constant eigenvector
  double rho = 0.0;
  for (int it = 0; it < 200; ++it) {
    auto w = K.multiply(v);
    double n = 0.0;
    for (double x : w) n += x * x;
    n = std::sqrt(n);
    double nv = 0.0;
    for (double x : v) nv += x * x;
    rho = n / std::sqrt(nv);
    for (auto& x : w) x /= n;
    v = std::move(w);
  }
  const double f = polarization_factor(sys.dielectric);
  const double delta = 0.05;
  CHECK(rho == doctest::Approx(0.5).epsilon(0.01));
  CHECK(1 - f * rho > 1 - f / 2 - delta);
  CHECK(1 + f * rho < 1 + f / 2 + delta);
}

// ---------------------------------------------------------------------------
// GMRES

TEST_CASE("gmres: identity and scaled identity converge in one step") {
  const std::vector<double> b{1.0, -2.0, 3.0, 0.5};
  for (double s : {1.0, 2.0}) {
    const auto r = gmres([s](auto x, auto y) { for (std::size_t i = 0; i < x.size(); ++i) y[i] = s * x[i]; }, b, {});
    CHECK(r.converged);
    CHECK(r.iterations == 1);
    for (std::size_t i = 0; i < b.size(); ++i) CHECK(r.x[i] == doctest::Approx(b[i] / s));
  }
  const auto z = gmres([](auto x, auto y) { std::copy(x.begin(), x.end(), y.begin()); }, std::vector<double>(3, 0.0), {});
  CHECK(z.converged);
  CHECK(z.iterations == 0);
}

TEST_CASE("gmres: nonsymmetric system, restarts and the iteration cap") {
  const std::size_t n = 120;
  std::mt19937_64 g(9);
  std::uniform_real_distribution<double> u(-1, 1);
  DenseMatrix m{n, n, std::vector<double>(n * n)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m.data[i * n + j] = (i == j ? 3.0 : 0.0) + u(g) / std::sqrt(double(n));
  std::vector<double> b(n);
  for (auto& x : b) x = u(g);
  const auto exact = dense_solve(m, b);
  const LinearOperator op = [&](auto x, auto y) {
    const auto r = m.multiply(x);
    std::copy(r.begin(), r.end(), y.begin());
  };
  for (int restart : {5, 30, 200}) {
    const auto r = gmres(op, b, {1e-10, restart, 500});
    CHECK(r.converged);
    CHECK(rel_l2(r.x, exact) < 1e-8);
    CHECK(r.residuals.back() <= 1e-10);
    // Non-increasing within each cycle.
    for (std::size_t c = 0; c < r.cycle_starts.size(); ++c) {
      const std::size_t b0 = r.cycle_starts[c];
      const std::size_t e0 = c + 1 < r.cycle_starts.size() ? r.cycle_starts[c + 1] : r.residuals.size();
      for (std::size_t i = b0 + 1; i < e0; ++i) CHECK(r.residuals[i] <= r.residuals[i - 1] * (1 + 1e-12));
    }
    if (restart == 5) CHECK(r.restarts > 0);
  }
  const auto capped = gmres(op, b, {1e-14, 30, 3});
  CHECK_FALSE(capped.converged);
  CHECK(capped.iterations == 3);
  CHECK(capped.residuals.size() == 4);
  CHECK_THROWS_AS(gmres(op, b, {0.0, 30, 10}), InputError);
  CHECK_THROWS_AS(gmres(op, b, {1e-5, 0, 10}), InputError);
}

TEST_CASE("gmres: breakdown on a singular operator is flagged") {
  // Nilpotent shift: A e0 = 0, so the Krylov space of e0 is invariant.
  const std::vector<double> b{1.0, 0.0};
  const auto r = gmres([](auto x, auto y) { y[0] = x[1]; y[1] = 0.0; }, b, {});
  CHECK(r.breakdown);
  CHECK_FALSE(r.converged);
  CHECK(r.residuals.back() == doctest::Approx(1.0));
}

// ---------------------------------------------------------------------------
// BIBEE, energies, solve

TEST_CASE("bibee_apply_Dinv") {
  const std::vector<double> en{0.3, -1.2};
  const double f = polarization_factor({4, 80});
  const auto p = bibee_apply_Dinv(en, Method::p, f);
  CHECK(p[0] == f * en[0]);
  const auto cfa = bibee_apply_Dinv(en, Method::cfa, f);
  CHECK(cfa[1] == doctest::Approx(0.95 * en[1]).epsilon(1e-14));
  const auto lb = bibee_apply_Dinv(en, Method::lb, f);
  CHECK(lb[0] == doctest::Approx(f * en[0] / (1 - f / 2)));
  CHECK_THROWS_AS(bibee_apply_Dinv(en, Method::lb, 2.0), NumericalError);
  CHECK_THROWS_AS(bibee_apply_Dinv(en, Method::bem, f), InputError);
  CHECK(parse_method("CFA") == Method::cfa);
  CHECK_THROWS_AS(parse_method("xyz"), InputError);
}

TEST_CASE("solvation_energy and units") {
  const std::vector<PointCharge> q{{{0, 0, 0}, 2.0}, {{1, 0, 0}, -1.0}};
  const std::vector<double> phi{0.5, 0.25};
  CHECK(solvation_energy(phi, q) == doctest::Approx(0.5 * (1.0 - 0.25)));
  CHECK(to_kcal_mol(1.0) == doctest::Approx(4 * std::numbers::pi * 332.0637));
  // Born, a = 2 A, q = 1 e, in kcal/mol.
  CHECK(to_kcal_mol(born_energy(2.0, 1.0, {4, 80})) == doctest::Approx(332.0637 / 4.0 * (1.0 / 80 - 0.25)));
  CHECK(to_kcal_mol(born_energy(2.0, 1.0, {4, 80})) == doctest::Approx(-19.72).epsilon(1e-3));
}

TEST_CASE("Born sphere: BEM within 1%, CFA within 0.5% of BEM, call counts") {
  const auto sys = sphere(4, {{{0, 0, 0}, 1.0}});
  const auto bem = solve(sys, Method::bem, {});
  CHECK(bem.converged);
  CHECK(bem.iterations <= 20);
  CHECK(bem.dG_internal == doctest::Approx(kBorn).epsilon(0.01));
  CHECK(bem.evaluations == 1 + bem.iterations + 1);
  const auto cfa = solve(sys, Method::cfa, {});
  CHECK(cfa.evaluations == 2);
  CHECK(cfa.iterations == 0);
  CHECK(std::abs(cfa.dG_internal - bem.dG_internal) <= 0.005 * std::abs(bem.dG_internal));

  // K' sigma_BEM = -sigma/2 pointwise here, which is exactly when CFA is exact.
  const OperatorContext ctx(sys, {});
  const auto k = ctx.apply_Kprime(bem.sigma);
  for (std::size_t i = 0; i < k.size(); ++i) CHECK(k[i] == doctest::Approx(-0.5 * bem.sigma[i]).epsilon(0.01));
}

TEST_CASE("bilinearity: scaling q by lambda scales dG by lambda^2") {
  const auto s1 = sphere(3, {{{0.2, 0.1, 0}, 1.0}, {{-0.3, 0, 0.1}, -0.4}});
  auto s3 = s1;
  for (auto& c : s3.charges) c.charge *= 3.0;
  for (Method m : {Method::bem, Method::cfa}) {
    const double a = solve(s1, m, {}).dG_internal, b = solve(s3, m, {}).dG_internal;
    CHECK(b == doctest::Approx(9.0 * a).epsilon(1e-10));
  }
}

TEST_CASE("off-centre charge: LB <= exact <= CFA, BEM near Kirkwood") {
  const auto kw = kirkwood_energy(1.0, 0.5, 1.0, {4, 80});
  CHECK(kw.converged);
  CHECK(kw.dG_internal == doctest::Approx(kKirkwoodHalf).epsilon(1e-14));
  double prev = 1e300;
  for (int sd : {3, 4, 5}) {
    const auto sys = sphere(sd, {{{0.5, 0, 0}, 1.0}});
    const auto bem = solve(sys, Method::bem, {});
    const double err = std::abs(bem.dG_internal - kw.dG_internal);
    CHECK(err < prev);
    prev = err;
    const auto cfa = solve(sys, Method::cfa, {}), lb = solve(sys, Method::lb, {}), p = solve(sys, Method::p, {});
    CHECK(lb.dG_internal <= kw.dG_internal);
    CHECK(kw.dG_internal <= cfa.dG_internal);
    CHECK(lb.dG_internal <= bem.dG_internal);
    CHECK(bem.dG_internal <= cfa.dG_internal);
    CHECK(lb.dG_internal <= p.dG_internal);
    CHECK(p.dG_internal <= cfa.dG_internal);
    CHECK(bem.dG_internal <= 0.0);
    if (sd == 5) CHECK(bem.dG_internal == doctest::Approx(kw.dG_internal).epsilon(0.02));
  }
}

TEST_CASE("Kirkwood oracle") {
  const DielectricModel eps{4, 80};
  CHECK(kirkwood_energy(1.0, 0.0, 1.0, eps, 1).dG_internal == doctest::Approx(born_energy(1.0, 1.0, eps)).epsilon(1e-15));
  CHECK(kirkwood_energy(1.0, 0.0, 1.0, eps, 1).converged);
  CHECK(kirkwood_energy(2.0, 0.0, -1.5, eps).dG_internal == doctest::Approx(born_energy(2.0, -1.5, eps)).epsilon(1e-15));
  const auto slow = kirkwood_energy(1.0, 0.99, 1.0, eps, 10);
  CHECK_FALSE(slow.converged);
  CHECK(slow.tail_estimate > 1e-10);
  CHECK_THROWS_AS(kirkwood_energy(1.0, 1.0, 1.0, eps), InputError);
  CHECK_THROWS_AS(kirkwood_energy(1.0, 0.5, 1.0, eps, 0), InputError);

  // The oracle depends only on |d|; the discrete solve must agree for any
  // offset direction up to discretization error.
  std::vector<double> dg;
  for (Vec3 dir : {Vec3{1, 0, 0}, normalized(Vec3{1, 1, 1}), normalized(Vec3{-0.3, 0.8, -0.5})}) {
    dg.push_back(solve(sphere(4, {{dir * 0.5, 1.0}}), Method::bem, {}).dG_internal);
  }
  for (double v : dg) CHECK(v == doctest::Approx(kKirkwoodHalf).epsilon(0.005));
}

TEST_CASE("binding energy") {
  auto a = solve(sphere(2, {{{0, 0, 0}, 1.0}}), Method::cfa, {});
  auto b = a, c = a;
  b.dG_internal = -0.25;
  c.dG_internal = 0.125;
  const auto e = binding_energy(a, b, c);
  CHECK(e.ddG_internal == a.dG_internal + 0.25 - 0.125);
  auto other = a;
  other.method = Method::bem;
  CHECK_THROWS_AS(binding_energy(a, other, c), InputError);
  other = a;
  other.dielectric.eps_out = 2.0;
  CHECK_THROWS_AS(binding_energy(a, b, other), InputError);
}

TEST_CASE("binding: well-separated charged spheres leave only the screened Coulomb term") {
  const Vec3 shift{40, 0, 0};
  const auto a = geom::icosphere(1.0, 2);
  const auto b = geom::icosphere(1.0, 2, shift);
  geom::SurfaceMesh both = a;
  const auto off = static_cast<std::uint32_t>(a.vertices.size());
  both.vertices.insert(both.vertices.end(), b.vertices.begin(), b.vertices.end());
  both.vertex_normals.insert(both.vertex_normals.end(), b.vertex_normals.begin(), b.vertex_normals.end());
  for (auto t : b.triangles) both.triangles.push_back({t[0] + off, t[1] + off, t[2] + off});
  const PointCharge qa{{0.3, 0, 0}, 1.0, 1.0}, qb{shift + Vec3{-0.3, 0, 0}, -1.0, 1.0};
  SolveOptions o;
  o.gmres.tolerance = 1e-8;
  const auto sa = solve(geom::make_system(a, {qa}), Method::bem, o);
  const auto sb = solve(geom::make_system(b, {qb}), Method::bem, o);
  const auto sc = solve(geom::make_system(both, {qa, qb}), Method::bem, o);
  const double R = norm(qb.position - qa.position);
  const double screened = qa.charge * qb.charge / (4 * std::numbers::pi * R) * (1 / 80.0 - 1 / 4.0);
  // Next corrections are O((a / R)^3) relative.
  CHECK(binding_energy(sc, sa, sb).ddG_internal == doctest::Approx(screened).epsilon(0.01));
}

TEST_CASE("solve report and sigma CSV") {
  const auto sys = sphere(2, {{{0, 0, 0}, 1.0}});
  const auto r = solve(sys, Method::bem, {});
  const auto j = solve_report(r, sys.panels.size(), sys.charges.size(), 8);
  CHECK(j["method"] == "bem");
  CHECK(j["n_panels"] == 320);
  CHECK(j["residuals"].size() == r.residuals.size());
  CHECK(j["timings"].contains("m2l"));
  CHECK(j["dG_kcal_mol"].get<double>() == r.dG_kcal_mol);
  std::ostringstream os;
  write_sigma_csv(os, sys.panels, r.sigma);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "panel_index,cx,cy,cz,area,sigma");
  int rows = 0;
  while (std::getline(is, line)) ++rows;
  CHECK(rows == 320);
}
