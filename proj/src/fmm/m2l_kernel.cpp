#include "fmmbem/fmm/m2l_kernel.hpp"

namespace fmmbem::fmm {

void m2l_scalar(const RotationData& r, const Complex* const* in, double distance, Complex* const* out) {
  m2l_lanes<kM2LLanes>(r, in, distance, out);
}

#ifndef FMMBEM_HAVE_AVX2
void m2l_avx2(const RotationData& r, const Complex* const* in, double distance, Complex* const* out) {
  m2l_scalar(r, in, distance, out);
}
#endif
#ifndef FMMBEM_HAVE_AVX512
void m2l_avx512(const RotationData& r, const Complex* const* in, double distance, Complex* const* out) {
  m2l_avx2(r, in, distance, out);
}
#endif

M2LKernel m2l_kernel(SimdLevel level) {
  switch (level) {
    case SimdLevel::avx2:
      return &m2l_avx2;
    case SimdLevel::avx512:
      return &m2l_avx512;
    default:
      return &m2l_scalar;
  }
}

M2LKernel m2l_kernel() { return m2l_kernel(simd_level()); }

}  // namespace fmmbem::fmm
