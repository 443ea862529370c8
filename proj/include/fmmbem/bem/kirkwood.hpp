#pragma once

#include "fmmbem/geom/mesh.hpp"

namespace fmmbem::bem {

struct KirkwoodResult {
  double dG_internal = 0.0;
  int terms = 0;
  double tail_estimate = 0.0;  // bound on the truncated remainder, relative to |dG|
  bool converged = false;      // tail_estimate <= 1e-10
};

/// Solvation energy of a point charge q at distance d from the centre of a
/// dielectric sphere of radius a (eps_in inside, eps_out outside), from the
/// Legendre series of the reaction field truncated after `terms` orders:
///
///   dG = q^2 / (8 pi eps_in a) sum_n (n + 1)(eps_in - eps_out) / (n eps_in + (n + 1) eps_out) (d/a)^(2n)
///
/// Throws InputError unless 0 <= d < a and terms >= 1.
KirkwoodResult kirkwood_energy(double a, double d, double q, const geom::DielectricModel& eps, int terms = 200);

/// (q^2 / (8 pi a)) (1/eps_out - 1/eps_in).
double born_energy(double a, double q, const geom::DielectricModel& eps);

}  // namespace fmmbem::bem
