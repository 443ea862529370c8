#include "fmmbem/fmm/harmonics.hpp"

#include <array>
#include <cmath>

namespace fmmbem::fmm {

namespace {

constexpr int kFactorialCount = 2 * kMaxOrder + 2;

constexpr std::array<double, kFactorialCount> make_factorials() {
  std::array<double, kFactorialCount> f{};
  f[0] = 1.0;
  for (int i = 1; i < kFactorialCount; ++i) f[i] = f[i - 1] * i;
  return f;
}

constexpr auto kFactorials = make_factorials();

}  // namespace

double factorial(int n) { return kFactorials[static_cast<std::size_t>(n)]; }

void regular_harmonics(const Vec3& x, int p, std::span<Complex> out) {
  const double r2 = norm2(x);
  const Complex xy(x.x, x.y);
  Complex diag(1.0, 0.0);  // R_m^m
  for (int m = 0; m <= p; ++m) {
    if (m > 0) diag *= -xy / (2.0 * m);
    out[coeff_index(m, m)] = diag;
    if (m + 1 <= p) out[coeff_index(m + 1, m)] = x.z * diag;
    for (int n = m + 2; n <= p; ++n) {
      const double inv = 1.0 / static_cast<double>((n - m) * (n + m));
      out[coeff_index(n, m)] =
          ((2.0 * n - 1.0) * x.z * out[coeff_index(n - 1, m)] - r2 * out[coeff_index(n - 2, m)]) * inv;
    }
  }
}

void irregular_harmonics(const Vec3& x, int p, std::span<Complex> out) {
  const double inv_r2 = 1.0 / norm2(x);
  const double inv_r = std::sqrt(inv_r2);
  const Complex xy(x.x, x.y);
  Complex diag(inv_r, 0.0);  // I_m^m
  for (int m = 0; m <= p; ++m) {
    if (m > 0) diag *= -(2.0 * m - 1.0) * xy * inv_r2;
    out[coeff_index(m, m)] = diag;
    if (m + 1 <= p) out[coeff_index(m + 1, m)] = (2.0 * m + 1.0) * x.z * inv_r2 * diag;
    for (int n = m + 2; n <= p; ++n) {
      const double a = 2.0 * n - 1.0;
      const double b = static_cast<double>((n + m - 1) * (n - m - 1));
      out[coeff_index(n, m)] = (a * x.z * out[coeff_index(n - 1, m)] - b * out[coeff_index(n - 2, m)]) * inv_r2;
    }
  }
}

}  // namespace fmmbem::fmm
