#pragma once

#include <functional>
#include <span>
#include <vector>

namespace fmmbem::bem {

struct GmresOptions {
  double tolerance = 1e-5;  // on ||b - A x|| / ||b||
  int restart = 30;
  int max_iterations = 200;

  /// Throws InputError unless 0 < tolerance < 1, restart >= 1 and max_iterations >= 1.
  void validate() const;
};

/// y = A x; y arrives sized and must be fully overwritten.
using LinearOperator = std::function<void(std::span<const double> x, std::span<double> y)>;

struct GmresResult {
  std::vector<double> x;
  int iterations = 0;  // Arnoldi steps, summed over restarts
  int restarts = 0;
  // Relative residual: entry 0 is the initial guess (1 for x0 = 0), then one
  // entry per Arnoldi step from the least-squares recurrence. Each restart
  // re-enters the true residual of the current iterate.
  std::vector<double> residuals;
  std::vector<int> cycle_starts;  // index into `residuals` where each cycle begins
  bool converged = false;
  bool breakdown = false;  // an Arnoldi vector vanished before convergence
  int operator_applications = 0;
};

/// Restarted GMRES with modified Gram-Schmidt and Givens rotations, zero
/// initial guess. Stops once the relative residual is within tolerance or
/// max_iterations steps have run; the best iterate is returned either way.
GmresResult gmres(const LinearOperator& op, std::span<const double> rhs, const GmresOptions& options);

}  // namespace fmmbem::bem
