#include "fmmbem/bem/gmres.hpp"

#include <cmath>
#include <limits>

#include "fmmbem/errors.hpp"

namespace fmmbem::bem {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

void GmresOptions::validate() const {
  if (!(tolerance > 0.0 && tolerance < 1.0)) throw InputError("GMRES tolerance must lie in (0, 1)");
  if (restart < 1) throw InputError("GMRES restart length must be >= 1");
  if (max_iterations < 1) throw InputError("GMRES max iterations must be >= 1");
}

GmresResult gmres(const LinearOperator& op, std::span<const double> rhs, const GmresOptions& options) {
  options.validate();
  const std::size_t n = rhs.size();
  GmresResult out;
  out.x.assign(n, 0.0);
  const double bnorm = norm2(rhs);
  out.cycle_starts.push_back(0);
  if (bnorm == 0.0) {
    out.residuals.push_back(0.0);
    out.converged = true;
    return out;
  }
  out.residuals.push_back(1.0);

  const int m = options.restart;
  std::vector<std::vector<double>> v(m + 1, std::vector<double>(n));
  std::vector<double> h((m + 1) * m), cs(m), sn(m), g(m + 1), y(m), w(n);
  auto H = [&](int i, int j) -> double& { return h[static_cast<std::size_t>(i) * m + j]; };

  std::vector<double> r(rhs.begin(), rhs.end());  // x0 = 0
  double beta = bnorm;
  for (;;) {
    for (std::size_t i = 0; i < n; ++i) v[0][i] = r[i] / beta;
    std::fill(g.begin(), g.end(), 0.0);
    g[0] = beta;
    int k = 0;
    bool stop = false;
    while (k < m && out.iterations < options.max_iterations) {
      op(v[k], w);
      ++out.operator_applications;
      const double wnorm = norm2(w);
      for (int i = 0; i <= k; ++i) {
        H(i, k) = dot(w, v[i]);
        for (std::size_t t = 0; t < n; ++t) w[t] -= H(i, k) * v[i][t];
      }
      H(k + 1, k) = norm2(w);
      const bool vanished = H(k + 1, k) <= 1e-14 * wnorm;
      if (!vanished) {
        for (std::size_t t = 0; t < n; ++t) v[k + 1][t] = w[t] / H(k + 1, k);
      }
      for (int i = 0; i < k; ++i) {
        const double a = H(i, k), b = H(i + 1, k);
        H(i, k) = cs[i] * a + sn[i] * b;
        H(i + 1, k) = -sn[i] * a + cs[i] * b;
      }
      const double a = H(k, k), b = H(k + 1, k);
      const double d = std::hypot(a, b);
      if (d == 0.0) {
        // A v_k lies in span(v_0..v_{k-1}) and adds nothing: no progress is
        // possible in this space.
        ++out.iterations;
        out.residuals.push_back(std::abs(g[k]) / bnorm);
        out.breakdown = true;
        stop = true;
        break;
      }
      cs[k] = a / d;
      sn[k] = b / d;
      H(k, k) = d;
      H(k + 1, k) = 0.0;
      g[k + 1] = -sn[k] * g[k];
      g[k] = cs[k] * g[k];
      ++k;
      ++out.iterations;
      const double rel = std::abs(g[k]) / bnorm;
      out.residuals.push_back(rel);
      if (rel <= options.tolerance) {
        out.converged = true;
        stop = true;
        break;
      }
      if (vanished) {
        // The Krylov space is invariant: the least-squares solution is the
        // best this operator allows.
        out.breakdown = true;
        stop = true;
        break;
      }
    }
    // x += V y with H y = g (upper triangular).
    for (int i = k - 1; i >= 0; --i) {
      double s = g[i];
      for (int j = i + 1; j < k; ++j) s -= H(i, j) * y[j];
      y[i] = H(i, i) == 0.0 ? 0.0 : s / H(i, i);
    }
    for (int j = 0; j < k; ++j) {
      for (std::size_t t = 0; t < n; ++t) out.x[t] += y[j] * v[j][t];
    }
    if (stop || out.iterations >= options.max_iterations) break;

    op(out.x, w);
    ++out.operator_applications;
    for (std::size_t t = 0; t < n; ++t) r[t] = rhs[t] - w[t];
    beta = norm2(r);
    ++out.restarts;
    out.cycle_starts.push_back(static_cast<int>(out.residuals.size()));
    out.residuals.push_back(beta / bnorm);
    if (beta / bnorm <= options.tolerance) {
      out.converged = true;
      break;
    }
  }
  return out;
}

}  // namespace fmmbem::bem
