// Built with -mavx512f -mfma; reached through m2l_kernel().
#include <immintrin.h>

#include "m2l_simd.hpp"

namespace fmmbem::fmm {

namespace {

struct V8 {
  using T = __m512d;
  static constexpr int kWidth = 8;
  static T zero() { return _mm512_setzero_pd(); }
  static T set1(double a) { return _mm512_set1_pd(a); }
  static T load(const double* a) { return _mm512_load_pd(a); }
  static void store(double* a, T v) { _mm512_store_pd(a, v); }
  static T mul(T a, T b) { return _mm512_mul_pd(a, b); }
  static T fmadd(T a, T b, T c) { return _mm512_fmadd_pd(a, b, c); }
  static T fmsub(T a, T b, T c) { return _mm512_fmsub_pd(a, b, c); }
};

}  // namespace

void m2l_avx512(const RotationData& r, const Complex* const* in, double distance, Complex* const* out) {
  static_assert(kM2LLanes == V8::kWidth);
  detail::m2l_simd<V8>(r, in, distance, out);
}

}  // namespace fmmbem::fmm
