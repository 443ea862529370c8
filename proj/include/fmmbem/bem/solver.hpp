#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fmmbem/bem/gmres.hpp"
#include "fmmbem/bem/operators.hpp"

namespace fmmbem::bem {

/// Full boundary-element solve, or one of the BIBEE diagonal approximations
/// where K' is replaced by s I: CFA (s = -1/2), P (s = 0), LB (s = +1/2).
enum class Method { bem, cfa, p, lb };

std::string_view method_name(Method m);
/// Accepts bem, cfa, p, lb (case-insensitive). Throws InputError otherwise.
Method parse_method(std::string_view name);
/// The BIBEE scale s. Throws InputError for Method::bem.
double bibee_scale(Method m);

/// Coulomb constant in kcal A / (mol e^2) for the q / (eps r) convention.
inline constexpr double kCoulombKcal = 332.0637;
/// Internal energies carry the kernel's explicit 1/(4 pi).
double to_kcal_mol(double internal);

struct SolveOptions {
  GmresOptions gmres;
  OperatorOptions operators;
  void validate() const;
};

struct SolveResult {
  Method method = Method::bem;
  geom::DielectricModel dielectric;
  double f = 0.0;
  std::vector<double> sigma;  // one induced density per panel
  std::vector<double> phi_reac;  // one reaction potential per charge
  int iterations = 0;
  std::vector<double> residuals;  // empty for BIBEE
  std::vector<int> cycle_starts;
  bool converged = true;
  bool breakdown = false;
  double dG_internal = 0.0;
  double dG_kcal_mol = 0.0;
  fmm::PhaseTimings timings;
  int evaluations = 0;  // N-body evaluations (B, each K', C)
};

/// sigma = f E_n / (1 - f s), the inverse of the diagonal D = (1 - f s) I.
/// Throws NumericalError when 1 - f s vanishes.
std::vector<double> bibee_apply_Dinv(std::span<const double> en, Method variant, double f);

/// 1/2 sum_k q_k phi_reac(r_k).
double solvation_energy(std::span<const double> phi_reac, std::span<const geom::PointCharge> charges);

/// B, then GMRES on A sigma = f E_n (or D^-1 for BIBEE), then C and the energy.
/// On GMRES non-convergence the partial result is returned with
/// converged = false.
SolveResult solve(const OperatorContext& ctx, std::span<const geom::PointCharge> charges, Method method,
                  const GmresOptions& gmres);
SolveResult solve(const geom::MolecularSystem& system, Method method, const SolveOptions& options);

struct BindingEnergy {
  double complex_internal = 0.0, protein_internal = 0.0, ligand_internal = 0.0;
  double ddG_internal = 0.0;
  double ddG_kcal_mol = 0.0;
};

/// dG(complex) - dG(protein) - dG(ligand). Throws InputError when the three
/// solves differ in method or dielectric model.
BindingEnergy binding_energy(const SolveResult& complex, const SolveResult& protein, const SolveResult& ligand);

}  // namespace fmmbem::bem
