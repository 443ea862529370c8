#include "fmmbem/bem/kirkwood.hpp"

#include <cmath>
#include <numbers>

#include "fmmbem/errors.hpp"

namespace fmmbem::bem {

KirkwoodResult kirkwood_energy(double a, double d, double q, const geom::DielectricModel& eps, int terms) {
  eps.validate();
  if (!(a > 0.0)) throw InputError("Kirkwood sphere radius must be positive");
  if (!(d >= 0.0 && d < a)) throw InputError("Kirkwood charge offset must satisfy 0 <= d < a");
  if (terms < 1) throw InputError("Kirkwood series needs at least one term");
  const double ei = eps.eps_in, eo = eps.eps_out;
  const double r = (d / a) * (d / a);
  double sum = 0.0, power = 1.0, last = 0.0;
  for (int n = 0; n < terms; ++n) {
    last = (n + 1) * (ei - eo) / (n * ei + (n + 1) * eo) * power;
    sum += last;
    power *= r;
  }
  KirkwoodResult out;
  out.terms = terms;
  out.dG_internal = q * q / (8.0 * std::numbers::pi * ei * a) * sum;
  // The coefficients approach (ei - eo)/(ei + eo) monotonically, so the
  // remainder is bounded by a geometric tail on the next term.
  const double next = std::abs(terms * (ei - eo) / (terms * ei + (terms + 1) * eo)) * power;
  const double tail = r < 1.0 ? next / (1.0 - r) : std::abs(last);
  out.tail_estimate = sum != 0.0 ? tail / std::abs(sum) : 0.0;
  out.converged = out.tail_estimate <= 1e-10;
  return out;
}

double born_energy(double a, double q, const geom::DielectricModel& eps) {
  eps.validate();
  if (!(a > 0.0)) throw InputError("Born radius must be positive");
  return q * q / (8.0 * std::numbers::pi * a) * (1.0 / eps.eps_out - 1.0 / eps.eps_in);
}

}  // namespace fmmbem::bem
