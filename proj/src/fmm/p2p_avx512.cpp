// Built with -mavx512f -mfma; only reached through the runtime dispatch in p2p.cpp.
#include <immintrin.h>

#include "fmmbem/fmm/p2p.hpp"

namespace fmmbem::fmm {

namespace {

// The 14-bit reciprocal square root covers the whole double range, so two
// Newton steps reach round-off (relative error 6e-5 -> 6e-9 -> 5e-17) with
// no range fallback. Zero lanes come out as inf/nan and are masked later.
inline __m512d inv_sqrt(__m512d r2) {
  const __m512d h = _mm512_mul_pd(_mm512_set1_pd(0.5), r2);
  const __m512d three_halves = _mm512_set1_pd(1.5);
  __m512d y = _mm512_rsqrt14_pd(r2);
  y = _mm512_mul_pd(y, _mm512_fnmadd_pd(_mm512_mul_pd(h, y), y, three_halves));
  return _mm512_mul_pd(y, _mm512_fnmadd_pd(_mm512_mul_pd(h, y), y, three_halves));
}

// One target against eight sources per vector, then a horizontal sum.
std::size_t one_target(double xi, double yi, double zi, const P2PBlock& s, const double* w, double* o) {
  std::size_t zeros = 0;
  const __m512d zero = _mm512_setzero_pd();
  const __m512d vx = _mm512_set1_pd(xi), vy = _mm512_set1_pd(yi), vz = _mm512_set1_pd(zi);
  __m512d phi = zero, gx = zero, gy = zero, gz = zero;
  for (std::size_t j = 0; j < s.n; j += 8) {
    const std::size_t left = s.n - j;
    const __mmask8 sm = left >= 8 ? static_cast<__mmask8>(0xFF) : static_cast<__mmask8>((1u << left) - 1);
    const __m512d dx = _mm512_sub_pd(vx, _mm512_maskz_loadu_pd(sm, s.x + j));
    const __m512d dy = _mm512_sub_pd(vy, _mm512_maskz_loadu_pd(sm, s.y + j));
    const __m512d dz = _mm512_sub_pd(vz, _mm512_maskz_loadu_pd(sm, s.z + j));
    const __m512d r2 = _mm512_fmadd_pd(dz, dz, _mm512_fmadd_pd(dy, dy, _mm512_mul_pd(dx, dx)));
    const __mmask8 live = _mm512_mask_cmp_pd_mask(sm, r2, zero, _CMP_NEQ_OQ);
    if (live != sm) zeros += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(sm & ~live)));
    const __m512d inv_r = _mm512_maskz_mov_pd(live, inv_sqrt(r2));
    const __m512d wr = _mm512_mul_pd(_mm512_maskz_loadu_pd(sm, w + j), inv_r);
    const __m512d wr3 = _mm512_mul_pd(wr, _mm512_mul_pd(inv_r, inv_r));
    phi = _mm512_add_pd(phi, wr);
    gx = _mm512_fnmadd_pd(wr3, dx, gx);
    gy = _mm512_fnmadd_pd(wr3, dy, gy);
    gz = _mm512_fnmadd_pd(wr3, dz, gz);
  }
  o[0] = _mm512_reduce_add_pd(phi);
  o[1] = _mm512_reduce_add_pd(gx);
  o[2] = _mm512_reduce_add_pd(gy);
  o[3] = _mm512_reduce_add_pd(gz);
  return zeros;
}

}  // namespace

// Eight targets per vector with sources broadcast. Leftover targets (fewer
// than eight) run one at a time over vectors of sources when there are
// enough sources to fill them, and as a masked group otherwise.
std::size_t p2p_avx512(const P2PBlock& t, const P2PBlock& s, const double* w, const P2PAccum& out) {
  std::size_t zeros = 0;
  const __m512d zero = _mm512_setzero_pd();
  const std::size_t full = t.n & ~std::size_t{7};
  if (full < t.n && s.n >= 16) {
    for (std::size_t i = full; i < t.n; ++i) {
      double o[4];
      zeros += one_target(t.x[i], t.y[i], t.z[i], s, w, o);
      out.phi[i] += o[0];
      out.gx[i] += o[1];
      out.gy[i] += o[2];
      out.gz[i] += o[3];
    }
  }
  const std::size_t end = (full < t.n && s.n >= 16) ? full : t.n;
  for (std::size_t i = 0; i < end; i += 8) {
    const std::size_t left = end - i;
    const __mmask8 tm = left >= 8 ? static_cast<__mmask8>(0xFF) : static_cast<__mmask8>((1u << left) - 1);
    const __m512d xi = _mm512_maskz_loadu_pd(tm, t.x + i);
    const __m512d yi = _mm512_maskz_loadu_pd(tm, t.y + i);
    const __m512d zi = _mm512_maskz_loadu_pd(tm, t.z + i);
    __m512d phi = zero, gx = zero, gy = zero, gz = zero;
    for (std::size_t j = 0; j < s.n; ++j) {
      const __m512d dx = _mm512_sub_pd(xi, _mm512_set1_pd(s.x[j]));
      const __m512d dy = _mm512_sub_pd(yi, _mm512_set1_pd(s.y[j]));
      const __m512d dz = _mm512_sub_pd(zi, _mm512_set1_pd(s.z[j]));
      const __m512d r2 = _mm512_fmadd_pd(dz, dz, _mm512_fmadd_pd(dy, dy, _mm512_mul_pd(dx, dx)));
      const __mmask8 live = _mm512_mask_cmp_pd_mask(tm, r2, zero, _CMP_NEQ_OQ);
      if (live != tm) zeros += static_cast<std::size_t>(__builtin_popcount(static_cast<unsigned>(tm & ~live)));
      const __m512d inv_r = _mm512_maskz_mov_pd(live, inv_sqrt(r2));
      const __m512d wr = _mm512_mul_pd(_mm512_set1_pd(w[j]), inv_r);
      const __m512d wr3 = _mm512_mul_pd(wr, _mm512_mul_pd(inv_r, inv_r));
      phi = _mm512_add_pd(phi, wr);
      gx = _mm512_fnmadd_pd(wr3, dx, gx);
      gy = _mm512_fnmadd_pd(wr3, dy, gy);
      gz = _mm512_fnmadd_pd(wr3, dz, gz);
    }
    _mm512_mask_storeu_pd(out.phi + i, tm, _mm512_add_pd(_mm512_maskz_loadu_pd(tm, out.phi + i), phi));
    _mm512_mask_storeu_pd(out.gx + i, tm, _mm512_add_pd(_mm512_maskz_loadu_pd(tm, out.gx + i), gx));
    _mm512_mask_storeu_pd(out.gy + i, tm, _mm512_add_pd(_mm512_maskz_loadu_pd(tm, out.gy + i), gy));
    _mm512_mask_storeu_pd(out.gz + i, tm, _mm512_add_pd(_mm512_maskz_loadu_pd(tm, out.gz + i), gz));
  }
  return zeros;
}

}  // namespace fmmbem::fmm
