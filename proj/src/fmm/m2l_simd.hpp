// Rotated M2L over V::kWidth lanes, one vector per coefficient. Included by
// the per-ISA sources, each compiled with its own target flags; V supplies
// the handful of intrinsics used.
#pragma once

#include "fmmbem/fmm/m2l_kernel.hpp"

namespace fmmbem::fmm::detail {

// y[r] = sum_j a[r * stride + j] * x[j] for R consecutive rows, accumulators
// held in registers.
template <class V, int R>
inline void rows(const double* a, int stride, int cols, const typename V::T* x, typename V::T* y) {
  typename V::T acc[R];
#pragma GCC unroll 8
  for (int r = 0; r < R; ++r) acc[r] = V::zero();
  for (int j = 0; j < cols; ++j) {
    const typename V::T xj = x[j];
#pragma GCC unroll 8
    for (int r = 0; r < R; ++r) acc[r] = V::fmadd(V::set1(a[r * stride + j]), xj, acc[r]);
  }
#pragma GCC unroll 8
  for (int r = 0; r < R; ++r) y[r] = acc[r];
}

template <class V>
inline void matvec(const double* a, int stride, int nrows, int cols, const typename V::T* x, typename V::T* y) {
  int i = 0;
  for (; i + 8 <= nrows; i += 8) rows<V, 8>(a + i * stride, stride, cols, x, y + i);
  if (i + 4 <= nrows) {
    rows<V, 4>(a + i * stride, stride, cols, x, y + i);
    i += 4;
  }
  if (i + 2 <= nrows) {
    rows<V, 2>(a + i * stride, stride, cols, x, y + i);
    i += 2;
  }
  if (i < nrows) rows<V, 1>(a + i * stride, stride, cols, x, y + i);
}

template <class V>
inline void m2l_simd(const RotationData& r, const Complex* const* in, double distance, Complex* const* out) {
  using T = typename V::T;
  constexpr int W = V::kWidth;
  constexpr int kN = kMaxOrder + 1;
  const int p = r.p;
  const int np = p + 1;
  T mre[kN * kN], mim[kN * kN], lre[kN * kN], lim[kN * kN];
  T sre[kN], sim[kN], ore[kN], oim[kN];
  double scale[kN], fact[2 * kN];
  alignas(64) double re[W], im[W];
  const double inv = 1.0 / distance;
  scale[0] = 1.0;
  for (int n = 1; n <= p; ++n) scale[n] = scale[n - 1] * inv;
  for (int j = 0; j <= 2 * p; ++j) fact[j] = factorial(j);

  for (int n = 0; n <= p; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * (n + 1) / 2;
    for (int mp = 0; mp <= n; ++mp) {
      for (int l = 0; l < W; ++l) {
        re[l] = in[l][base + mp].real();
        im[l] = in[l][base + mp].imag();
      }
      const T vr = V::load(re), vi = V::load(im);
      const T cr = V::set1(r.phase_re[mp] * scale[n]);
      const T ci = V::set1(r.phase_im[mp] * scale[n]);
      sre[mp] = V::fmsub(vr, cr, V::mul(vi, ci));
      sim[mp] = V::fmadd(vr, ci, V::mul(vi, cr));
    }
    matvec<V>(r.fwd_re + r.offset[n], n + 1, n + 1, n + 1, sre, ore);
    matvec<V>(r.fwd_im + r.offset[n], n + 1, n + 1, n + 1, sim, oim);
    for (int m = 0; m <= n; ++m) {
      mre[m * np + n] = ore[m];
      mim[m * np + n] = oim[m];
    }
  }

  // Axial step: a Hankel product, row n of the matrix starts at fact + n + m.
  for (int m = 0; m <= p; ++m) {
    const int len = p - m + 1;
    matvec<V>(fact + 2 * m, 1, len, len, mre + m * np + m, lre + m * np + m);
    matvec<V>(fact + 2 * m, 1, len, len, mim + m * np + m, lim + m * np + m);
    for (int n = m; n <= p; ++n) {
      const T sg = V::set1(((n + m) & 1) ? -scale[n] * inv : scale[n] * inv);
      lre[m * np + n] = V::mul(lre[m * np + n], sg);
      lim[m * np + n] = V::mul(lim[m * np + n], sg);
    }
  }

  for (int n = 0; n <= p; ++n) {
    for (int m = 0; m <= n; ++m) {
      sre[m] = lre[m * np + n];
      sim[m] = lim[m * np + n];
    }
    matvec<V>(r.bwd_re + r.offset[n], n + 1, n + 1, n + 1, sre, ore);
    matvec<V>(r.bwd_im + r.offset[n], n + 1, n + 1, n + 1, sim, oim);
    const std::size_t base = static_cast<std::size_t>(n) * (n + 1) / 2;
    for (int mp = 0; mp <= n; ++mp) {
      const T pr = V::set1(r.phase_re[mp]);
      const T pi = V::set1(r.phase_im[mp]);
      V::store(re, V::fmadd(ore[mp], pr, V::mul(oim[mp], pi)));
      V::store(im, V::fmsub(oim[mp], pr, V::mul(ore[mp], pi)));
      for (int l = 0; l < W; ++l) out[l][base + mp] += Complex(re[l], im[l]);
    }
  }
}

}  // namespace fmmbem::fmm::detail
