// Built with -mavx2 -mfma; reached through m2l_kernel().
#include <immintrin.h>

#include "m2l_simd.hpp"

namespace fmmbem::fmm {

namespace {

struct V4 {
  using T = __m256d;
  static constexpr int kWidth = 4;
  static T zero() { return _mm256_setzero_pd(); }
  static T set1(double a) { return _mm256_set1_pd(a); }
  static T load(const double* a) { return _mm256_load_pd(a); }
  static void store(double* a, T v) { _mm256_store_pd(a, v); }
  static T mul(T a, T b) { return _mm256_mul_pd(a, b); }
  static T fmadd(T a, T b, T c) { return _mm256_fmadd_pd(a, b, c); }
  static T fmsub(T a, T b, T c) { return _mm256_fmsub_pd(a, b, c); }
};

}  // namespace

void m2l_avx2(const RotationData& r, const Complex* const* in, double distance, Complex* const* out) {
  static_assert(kM2LLanes % V4::kWidth == 0);
  for (int g = 0; g < kM2LLanes; g += V4::kWidth) detail::m2l_simd<V4>(r, in + g, distance, out + g);
}

}  // namespace fmmbem::fmm
