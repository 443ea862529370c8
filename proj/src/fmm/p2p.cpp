#include "fmmbem/fmm/p2p.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <string_view>

namespace fmmbem::fmm {

std::size_t p2p_scalar(const P2PBlock& t, const P2PBlock& s, const double* w, const P2PAccum& out) {
  std::size_t zeros = 0;
  for (std::size_t i = 0; i < t.n; ++i) {
    const double xi = t.x[i], yi = t.y[i], zi = t.z[i];
    double phi = 0.0, gx = 0.0, gy = 0.0, gz = 0.0;
    for (std::size_t j = 0; j < s.n; ++j) {
      const double dx = xi - s.x[j];
      const double dy = yi - s.y[j];
      const double dz = zi - s.z[j];
      const double r2 = dx * dx + dy * dy + dz * dz;
      if (r2 == 0.0) {
        ++zeros;
        continue;
      }
      const double inv_r = 1.0 / std::sqrt(r2);
      const double wr = w[j] * inv_r;
      const double wr3 = wr * inv_r * inv_r;
      phi += wr;
      gx -= wr3 * dx;
      gy -= wr3 * dy;
      gz -= wr3 * dz;
    }
    out.phi[i] += phi;
    out.gx[i] += gx;
    out.gy[i] += gy;
    out.gz[i] += gz;
  }
  return zeros;
}

SimdLevel cpu_simd_level() {
  static const SimdLevel level = [] {
    SimdLevel l = SimdLevel::scalar;
#if defined(__x86_64__) || defined(__i386__)
#ifdef FMMBEM_HAVE_AVX2
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma")) l = SimdLevel::avx2;
#endif
#ifdef FMMBEM_HAVE_AVX512
    if (l == SimdLevel::avx2 && __builtin_cpu_supports("avx512f")) l = SimdLevel::avx512;
#endif
#endif
    return l;
  }();
  return level;
}

namespace {

std::atomic<int> g_cap{static_cast<int>(SimdLevel::avx512)};

SimdLevel env_cap() {
  static const SimdLevel cap = [] {
    const char* v = std::getenv("FMMBEM_SIMD");
    if (v == nullptr) return SimdLevel::avx512;
    const std::string_view s(v);
    if (s == "scalar") return SimdLevel::scalar;
    if (s == "avx2") return SimdLevel::avx2;
    return SimdLevel::avx512;
  }();
  return cap;
}

}  // namespace

void set_simd_cap(SimdLevel cap) { g_cap.store(static_cast<int>(cap)); }

SimdLevel simd_level() {
  const int l = std::min({static_cast<int>(cpu_simd_level()), static_cast<int>(env_cap()), g_cap.load()});
  return static_cast<SimdLevel>(l);
}

const char* simd_level_name(SimdLevel level) {
  switch (level) {
    case SimdLevel::avx2:
      return "avx2";
    case SimdLevel::avx512:
      return "avx512";
    default:
      return "scalar";
  }
}

P2PKernel p2p_kernel(SimdLevel level) {
  switch (level) {
    case SimdLevel::avx2:
      return &p2p_avx2;
    case SimdLevel::avx512:
      return &p2p_avx512;
    default:
      return &p2p_scalar;
  }
}

P2PKernel p2p_kernel() { return p2p_kernel(simd_level()); }

#ifndef FMMBEM_HAVE_AVX2
std::size_t p2p_avx2(const P2PBlock& t, const P2PBlock& s, const double* w, const P2PAccum& out) {
  return p2p_scalar(t, s, w, out);
}
#endif
#ifndef FMMBEM_HAVE_AVX512
std::size_t p2p_avx512(const P2PBlock& t, const P2PBlock& s, const double* w, const P2PAccum& out) {
  return p2p_avx2(t, s, w, out);
}
#endif

}  // namespace fmmbem::fmm
