#pragma once

#include "fmmbem/fmm/p2p.hpp"
#include "fmmbem/fmm/rotation.hpp"

namespace fmmbem::fmm {

// Multipole-to-local translations for W pairs sharing one rotation and one
// distance, lane l reading in[l] and adding into out[l]: rotate (per degree),
// translate along z (per order), rotate back. Coefficients are rescaled by
// powers of the distance so the axial step never forms rho^-(2p+1) alone.
template <int W>
inline void m2l_lanes(const RotationData& r, const Complex* const* in, double distance, Complex* const* out) {
  const int p = r.p;
  const double* phase_re = r.phase_re;
  const double* phase_im = r.phase_im;
  const std::size_t* offset = r.offset;
  const double *fwd_re = r.fwd_re, *fwd_im = r.fwd_im, *bwd_re = r.bwd_re, *bwd_im = r.bwd_im;
  constexpr int kN = kMaxOrder + 1;
  const int np = p + 1;
  // Rotated-frame arrays, order-major: entry (m, n) at (m * np + n) * W.
  alignas(32) double mre[kN * kN * W], mim[kN * kN * W];
  alignas(32) double sre[kN * W], sim[kN * W], ore[kN * W], oim[kN * W];
  double scale[kN], fact[2 * kN];
  const double inv = 1.0 / distance;
  scale[0] = 1.0;
  for (int n = 1; n <= p; ++n) scale[n] = scale[n - 1] * inv;
  for (int j = 0; j <= 2 * p; ++j) fact[j] = factorial(j);

  for (int n = 0; n <= p; ++n) {
    const std::size_t base = static_cast<std::size_t>(n) * (n + 1) / 2;
    for (int mp = 0; mp <= n; ++mp) {
      const double cr = phase_re[mp] * scale[n], ci = phase_im[mp] * scale[n];
      for (int l = 0; l < W; ++l) {
        const double vr = in[l][base + mp].real(), vi = in[l][base + mp].imag();
        sre[mp * W + l] = vr * cr - vi * ci;
        sim[mp * W + l] = vr * ci + vi * cr;
      }
    }
    for (int i = 0; i < (n + 1) * W; ++i) ore[i] = oim[i] = 0.0;
    const double* fr = fwd_re + offset[n];
    const double* fi = fwd_im + offset[n];
    for (int mp = 0; mp <= n; ++mp) {
      const double* a = sre + mp * W;
      const double* b = sim + mp * W;
      for (int m = 0; m <= n; ++m) {
        const double cr = fr[m * (n + 1) + mp], ci = fi[m * (n + 1) + mp];
        for (int l = 0; l < W; ++l) {
          ore[m * W + l] += cr * a[l];
          oim[m * W + l] += ci * b[l];
        }
      }
    }
    for (int m = 0; m <= n; ++m) {
      for (int l = 0; l < W; ++l) {
        mre[(m * np + n) * W + l] = ore[m * W + l];
        mim[(m * np + n) * W + l] = oim[m * W + l];
      }
    }
  }

  // Axial translation.
  alignas(32) double lre[kN * kN * W], lim[kN * kN * W];
  for (int m = 0; m <= p; ++m) {
    double* lr = lre + m * np * W;
    double* li = lim + m * np * W;
    const double* mr = mre + m * np * W;
    const double* mi = mim + m * np * W;
    for (int n = m; n <= p; ++n) {
      double accr[W] = {}, acci[W] = {};
      for (int k = m; k <= p; ++k) {
        const double f = fact[n + k];
        for (int l = 0; l < W; ++l) {
          accr[l] += mr[k * W + l] * f;
          acci[l] += mi[k * W + l] * f;
        }
      }
      const double sg = ((n + m) & 1) ? -scale[n] * inv : scale[n] * inv;
      for (int l = 0; l < W; ++l) {
        lr[n * W + l] = accr[l] * sg;
        li[n * W + l] = acci[l] * sg;
      }
    }
  }

  for (int n = 0; n <= p; ++n) {
    for (int i = 0; i < (n + 1) * W; ++i) ore[i] = oim[i] = 0.0;
    const double* br = bwd_re + offset[n];
    const double* bi = bwd_im + offset[n];
    for (int m = 0; m <= n; ++m) {
      const double* a = lre + (m * np + n) * W;
      const double* b = lim + (m * np + n) * W;
      for (int mp = 0; mp <= n; ++mp) {
        const double cr = br[mp * (n + 1) + m], ci = bi[mp * (n + 1) + m];
        for (int l = 0; l < W; ++l) {
          ore[mp * W + l] += cr * a[l];
          oim[mp * W + l] += ci * b[l];
        }
      }
    }
    const std::size_t base = static_cast<std::size_t>(n) * (n + 1) / 2;
    for (int mp = 0; mp <= n; ++mp) {
      const double pr = phase_re[mp], pi = phase_im[mp];
      for (int l = 0; l < W; ++l) {
        const double re = ore[mp * W + l] * pr + oim[mp * W + l] * pi;
        const double im = oim[mp * W + l] * pr - ore[mp * W + l] * pi;
        out[l][base + mp] += Complex(re, im);
      }
    }
  }
}

// Translations per kernel call.
inline constexpr int kM2LLanes = 8;

using M2LKernel = void (*)(const RotationData& r, const Complex* const* in, double distance, Complex* const* out);

/// Reference: the generic lane loops above.
void m2l_scalar(const RotationData& r, const Complex* const* in, double distance, Complex* const* out);

/// Two groups of four lanes, one AVX2 register per coefficient. Only
/// callable when cpu_simd_level() >= SimdLevel::avx2.
void m2l_avx2(const RotationData& r, const Complex* const* in, double distance, Complex* const* out);

/// All eight lanes in one AVX-512 register per coefficient. Only callable
/// when cpu_simd_level() == SimdLevel::avx512.
void m2l_avx512(const RotationData& r, const Complex* const* in, double distance, Complex* const* out);

M2LKernel m2l_kernel(SimdLevel level);
M2LKernel m2l_kernel();

}  // namespace fmmbem::fmm
