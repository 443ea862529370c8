#include "fmmbem/octree/morton.hpp"

#include <string>

#include "fmmbem/errors.hpp"

namespace fmmbem::octree {

namespace {

// Spreads the low 21 bits of v so that bit i lands at bit 3i.
constexpr std::uint64_t spread3(std::uint64_t v) {
  v &= 0x1fffff;
  v = (v | (v << 32)) & 0x1f00000000ffffULL;
  v = (v | (v << 16)) & 0x1f0000ff0000ffULL;
  v = (v | (v << 8)) & 0x100f00f00f00f00fULL;
  v = (v | (v << 4)) & 0x10c30c30c30c30c3ULL;
  v = (v | (v << 2)) & 0x1249249249249249ULL;
  return v;
}

constexpr std::uint64_t compact3(std::uint64_t v) {
  v &= 0x1249249249249249ULL;
  v = (v ^ (v >> 2)) & 0x10c30c30c30c30c3ULL;
  v = (v ^ (v >> 4)) & 0x100f00f00f00f00fULL;
  v = (v ^ (v >> 8)) & 0x1f0000ff0000ffULL;
  v = (v ^ (v >> 16)) & 0x1f00000000ffffULL;
  v = (v ^ (v >> 32)) & 0x1fffffULL;
  return v;
}

}  // namespace

MortonKey morton_encode(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz, int level) {
  if (level < 0 || level > kMaxLevel) throw InputError("morton level " + std::to_string(level) + " out of range");
  const std::uint64_t extent = std::uint64_t{1} << level;
  if (ix >= extent || iy >= extent || iz >= extent) {
    throw InputError("morton index (" + std::to_string(ix) + ", " + std::to_string(iy) + ", " + std::to_string(iz) +
                     ") out of range for level " + std::to_string(level));
  }
  return {level, spread3(ix) | (spread3(iy) << 1) | (spread3(iz) << 2)};
}

std::array<std::uint32_t, 3> morton_decode(const MortonKey& key) {
  return {static_cast<std::uint32_t>(compact3(key.key)), static_cast<std::uint32_t>(compact3(key.key >> 1)),
          static_cast<std::uint32_t>(compact3(key.key >> 2))};
}

}  // namespace fmmbem::octree
