#pragma once

#include <complex>
#include <cstddef>
#include <span>

#include "fmmbem/vec3.hpp"

namespace fmmbem::fmm {

using Complex = std::complex<double>;

inline constexpr int kMaxOrder = 30;

/// Storage size of an order-p expansion: entries (n, m) with 0 <= m <= n <= p.
constexpr std::size_t num_coefficients(int p) {
  return static_cast<std::size_t>(p + 1) * static_cast<std::size_t>(p + 2) / 2;
}

constexpr std::size_t coeff_index(int n, int m) {
  return static_cast<std::size_t>(n) * static_cast<std::size_t>(n + 1) / 2 + static_cast<std::size_t>(m);
}

/// Coefficient (n, m) for any -n <= m <= n of a real field stored for m >= 0:
/// c(n, -m) = (-1)^m conj(c(n, m)).
inline Complex coeff_at(std::span<const Complex> c, int n, int m) {
  if (m >= 0) return c[coeff_index(n, m)];
  const Complex v = std::conj(c[coeff_index(n, -m)]);
  return (m & 1) ? -v : v;
}

/// Scaled regular solid harmonics R_n^m(x) = r^n P_n^m(cos t) e^{i m phi} / (n+m)!
/// (Condon-Shortley phase in P), for 0 <= m <= n <= p.
void regular_harmonics(const Vec3& x, int p, std::span<Complex> out);

/// Scaled irregular solid harmonics I_n^m(x) = (n-m)! P_n^m(cos t) e^{i m phi} / r^{n+1}.
void irregular_harmonics(const Vec3& x, int p, std::span<Complex> out);

/// Factorials 0! .. (2*kMaxOrder + 1)!.
double factorial(int n);

}  // namespace fmmbem::fmm
