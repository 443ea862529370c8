#pragma once

#include <cstddef>

namespace fmmbem::fmm {

// Direct 1/r interaction between a block of targets and a block of sources,
// both in structure-of-arrays layout. Adds sum_j w_j / r and its gradient
// with respect to the target position (no 1/(4 pi)). Pairs at zero distance
// are skipped; the return value is how many were skipped.
struct P2PBlock {
  const double* x;
  const double* y;
  const double* z;
  std::size_t n;
};

struct P2PAccum {
  double* phi;
  double* gx;
  double* gy;
  double* gz;
};

using P2PKernel = std::size_t (*)(const P2PBlock& targets, const P2PBlock& sources, const double* weights,
                                  const P2PAccum& out);

std::size_t p2p_scalar(const P2PBlock& targets, const P2PBlock& sources, const double* weights,
                       const P2PAccum& out);

/// Only callable when cpu_simd_level() >= SimdLevel::avx2.
std::size_t p2p_avx2(const P2PBlock& targets, const P2PBlock& sources, const double* weights, const P2PAccum& out);

/// Only callable when cpu_simd_level() == SimdLevel::avx512.
std::size_t p2p_avx512(const P2PBlock& targets, const P2PBlock& sources, const double* weights,
                       const P2PAccum& out);

enum class SimdLevel { scalar = 0, avx2 = 1, avx512 = 2 };

/// Best level that is both compiled in and supported by this CPU.
SimdLevel cpu_simd_level();

/// Level the kernels actually use: cpu_simd_level(), capped by the
/// FMMBEM_SIMD environment variable (scalar, avx2 or avx512) and by
/// set_simd_cap().
SimdLevel simd_level();
void set_simd_cap(SimdLevel cap);

const char* simd_level_name(SimdLevel level);

P2PKernel p2p_kernel();
P2PKernel p2p_kernel(SimdLevel level);

}  // namespace fmmbem::fmm
