#include "fmmbem/bem/solver.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numbers>
#include <string>

#include "fmmbem/errors.hpp"

namespace fmmbem::bem {

std::string_view method_name(Method m) {
  switch (m) {
    case Method::bem: return "bem";
    case Method::cfa: return "cfa";
    case Method::p: return "p";
    case Method::lb: return "lb";
  }
  return "?";
}

Method parse_method(std::string_view name) {
  std::string s(name);
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  for (Method m : {Method::bem, Method::cfa, Method::p, Method::lb}) {
    if (s == method_name(m)) return m;
  }
  throw InputError("unknown method '" + std::string(name) + "' (expected bem, cfa, p or lb)");
}

double bibee_scale(Method m) {
  switch (m) {
    case Method::cfa: return -0.5;
    case Method::p: return 0.0;
    case Method::lb: return 0.5;
    case Method::bem: break;
  }
  throw InputError("bem is not a BIBEE variant");
}

double to_kcal_mol(double internal) { return internal * 4.0 * std::numbers::pi * kCoulombKcal; }

void SolveOptions::validate() const {
  gmres.validate();
  operators.fmm.validate();
}

std::vector<double> bibee_apply_Dinv(std::span<const double> en, Method variant, double f) {
  const double d = 1.0 - f * bibee_scale(variant);
  if (std::abs(d) < 1e-12) throw NumericalError("BIBEE diagonal 1 - f s vanishes");
  std::vector<double> sigma(en.size());
  for (std::size_t i = 0; i < en.size(); ++i) sigma[i] = f * en[i] / d;
  return sigma;
}

double solvation_energy(std::span<const double> phi_reac, std::span<const geom::PointCharge> charges) {
  if (phi_reac.size() != charges.size()) throw InputError("solvation_energy: one potential per charge expected");
  double s = 0.0;
  for (std::size_t k = 0; k < charges.size(); ++k) s += charges[k].charge * phi_reac[k];
  return 0.5 * s;
}

SolveResult solve(const OperatorContext& ctx, std::span<const geom::PointCharge> charges, Method method,
                  const GmresOptions& gmres_options) {
  gmres_options.validate();
  if (charges.size() != ctx.num_charges()) throw InputError("solve: charge count does not match the operators");
  SolveResult out;
  out.method = method;
  out.dielectric = ctx.dielectric();
  out.f = ctx.f();
  const int evals0 = ctx.evaluations();
  const fmm::PhaseTimings t0 = ctx.timings();

  std::vector<double> q(charges.size());
  for (std::size_t k = 0; k < q.size(); ++k) q[k] = charges[k].charge;
  const auto en = ctx.apply_B(q);

  if (method == Method::bem) {
    std::vector<double> rhs(en.size());
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = ctx.f() * en[i];
    const LinearOperator op = [&](std::span<const double> x, std::span<double> y) {
      const auto ax = ctx.apply_A(x);
      std::copy(ax.begin(), ax.end(), y.begin());
    };
    auto g = gmres(op, rhs, gmres_options);
    out.sigma = std::move(g.x);
    out.iterations = g.iterations;
    out.residuals = std::move(g.residuals);
    out.cycle_starts = std::move(g.cycle_starts);
    out.converged = g.converged;
    out.breakdown = g.breakdown;
  } else {
    out.sigma = bibee_apply_Dinv(en, method, ctx.f());
  }

  out.phi_reac = ctx.apply_C(out.sigma);
  out.dG_internal = solvation_energy(out.phi_reac, charges);
  out.dG_kcal_mol = to_kcal_mol(out.dG_internal);
  const fmm::PhaseTimings t1 = ctx.timings();
  out.timings = {t1.tree - t0.tree, t1.upward - t0.upward, t1.m2l - t0.m2l, t1.p2p - t0.p2p, t1.total - t0.total};
  out.evaluations = ctx.evaluations() - evals0;
  return out;
}

SolveResult solve(const geom::MolecularSystem& system, Method method, const SolveOptions& options) {
  options.validate();
  const OperatorContext ctx(system, options.operators);
  return solve(ctx, system.charges, method, options.gmres);
}

BindingEnergy binding_energy(const SolveResult& complex, const SolveResult& protein, const SolveResult& ligand) {
  if (complex.method != protein.method || complex.method != ligand.method)
    throw InputError("binding energy needs three solves with the same method");
  if (!(complex.dielectric == protein.dielectric) || !(complex.dielectric == ligand.dielectric))
    throw InputError("binding energy needs three solves with the same dielectric model");
  BindingEnergy b;
  b.complex_internal = complex.dG_internal;
  b.protein_internal = protein.dG_internal;
  b.ligand_internal = ligand.dG_internal;
  b.ddG_internal = complex.dG_internal - protein.dG_internal - ligand.dG_internal;
  b.ddG_kcal_mol = to_kcal_mol(b.ddG_internal);
  return b;
}

}  // namespace fmmbem::bem
