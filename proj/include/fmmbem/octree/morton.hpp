#pragma once

#include <array>
#include <cstdint>

namespace fmmbem::octree {

inline constexpr int kMaxLevel = 21;

/// Bit-interleaved cell index. Within each 3-bit group the x bit is the least
/// significant, so the children of a cell enumerate as octant = x | y<<1 | z<<2.
struct MortonKey {
  int level = 0;
  std::uint64_t key = 0;

  friend constexpr bool operator==(const MortonKey&, const MortonKey&) = default;
  friend constexpr auto operator<=>(const MortonKey&, const MortonKey&) = default;
};

/// Throws InputError when level is outside [0, 21] or an index is >= 2^level.
MortonKey morton_encode(std::uint32_t ix, std::uint32_t iy, std::uint32_t iz, int level);

std::array<std::uint32_t, 3> morton_decode(const MortonKey& key);

constexpr MortonKey parent_key(const MortonKey& k) { return {k.level - 1, k.key >> 3}; }
constexpr MortonKey child_key(const MortonKey& k, int octant) {
  return {k.level + 1, (k.key << 3) | static_cast<std::uint64_t>(octant)};
}

}  // namespace fmmbem::octree
