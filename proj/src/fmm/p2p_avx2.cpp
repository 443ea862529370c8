// Built with -mavx2 -mfma; only reached through the runtime dispatch in p2p.cpp.
#include <immintrin.h>

#include "fmmbem/fmm/p2p.hpp"

namespace fmmbem::fmm {

// Four targets per vector, sources broadcast one at a time so that each
// target accumulates its sources in the same order as the scalar kernel.
// 1/r starts from the single-precision estimate and takes three Newton
// steps (relative error 3.7e-4 -> 2e-7 -> 6e-14 -> round-off); squared
// distances outside the float range use an exact divide instead.
std::size_t p2p_avx2(const P2PBlock& t, const P2PBlock& s, const double* w, const P2PAccum& out) {
  std::size_t zeros = 0;
  const __m256d zero = _mm256_setzero_pd();
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d half = _mm256_set1_pd(0.5);
  const __m256d three_halves = _mm256_set1_pd(1.5);
  const __m256d lo = _mm256_set1_pd(1e-36);
  const __m256d hi = _mm256_set1_pd(1e36);
  std::size_t i = 0;
  for (; i + 4 <= t.n; i += 4) {
    const __m256d xi = _mm256_loadu_pd(t.x + i);
    const __m256d yi = _mm256_loadu_pd(t.y + i);
    const __m256d zi = _mm256_loadu_pd(t.z + i);
    __m256d phi = zero, gx = zero, gy = zero, gz = zero;
    for (std::size_t j = 0; j < s.n; ++j) {
      const __m256d dx = _mm256_sub_pd(xi, _mm256_broadcast_sd(s.x + j));
      const __m256d dy = _mm256_sub_pd(yi, _mm256_broadcast_sd(s.y + j));
      const __m256d dz = _mm256_sub_pd(zi, _mm256_broadcast_sd(s.z + j));
      const __m256d r2 = _mm256_fmadd_pd(dz, dz, _mm256_fmadd_pd(dy, dy, _mm256_mul_pd(dx, dx)));
      const __m256d live = _mm256_cmp_pd(r2, zero, _CMP_NEQ_OQ);
      const int mask = _mm256_movemask_pd(live);
      if (mask != 0xF) zeros += 4 - static_cast<std::size_t>(__builtin_popcount(mask));
      const __m256d safe = _mm256_blendv_pd(one, r2, live);
      __m256d y;
      const __m256d outside = _mm256_or_pd(_mm256_cmp_pd(safe, lo, _CMP_LT_OQ), _mm256_cmp_pd(safe, hi, _CMP_GT_OQ));
      if (_mm256_movemask_pd(outside) == 0) {
        y = _mm256_cvtps_pd(_mm_rsqrt_ps(_mm256_cvtpd_ps(safe)));
        const __m256d h = _mm256_mul_pd(half, safe);
        for (int it = 0; it < 3; ++it) y = _mm256_mul_pd(y, _mm256_fnmadd_pd(_mm256_mul_pd(h, y), y, three_halves));
      } else {
        y = _mm256_div_pd(one, _mm256_sqrt_pd(safe));
      }
      const __m256d inv_r = _mm256_and_pd(y, live);
      const __m256d wr = _mm256_mul_pd(_mm256_broadcast_sd(w + j), inv_r);
      const __m256d wr3 = _mm256_mul_pd(wr, _mm256_mul_pd(inv_r, inv_r));
      phi = _mm256_add_pd(phi, wr);
      gx = _mm256_fnmadd_pd(wr3, dx, gx);
      gy = _mm256_fnmadd_pd(wr3, dy, gy);
      gz = _mm256_fnmadd_pd(wr3, dz, gz);
    }
    _mm256_storeu_pd(out.phi + i, _mm256_add_pd(_mm256_loadu_pd(out.phi + i), phi));
    _mm256_storeu_pd(out.gx + i, _mm256_add_pd(_mm256_loadu_pd(out.gx + i), gx));
    _mm256_storeu_pd(out.gy + i, _mm256_add_pd(_mm256_loadu_pd(out.gy + i), gy));
    _mm256_storeu_pd(out.gz + i, _mm256_add_pd(_mm256_loadu_pd(out.gz + i), gz));
  }
  if (i < t.n) {
    const P2PBlock rest{t.x + i, t.y + i, t.z + i, t.n - i};
    zeros += p2p_scalar(rest, s, w, {out.phi + i, out.gx + i, out.gy + i, out.gz + i});
  }
  return zeros;
}

}  // namespace fmmbem::fmm
