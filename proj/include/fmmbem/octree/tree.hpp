#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "fmmbem/octree/morton.hpp"
#include "fmmbem/vec3.hpp"

namespace fmmbem::octree {

inline constexpr int kDefaultNcrit = 64;

struct Range {
  std::uint32_t begin = 0;
  std::uint32_t end = 0;
  std::uint32_t size() const { return end - begin; }
  bool empty() const { return begin == end; }
};

struct Cell {
  MortonKey key;
  std::array<std::uint32_t, 3> coords{};  // integer grid position at `key.level`
  Vec3 center;
  double half_width = 0.0;
  Range sources;  // into Tree::source_order
  Range targets;  // into Tree::target_order
  std::int32_t parent = -1;
  std::uint32_t first_child = 0;  // children are stored contiguously
  std::uint8_t num_children = 0;

  int level() const { return key.level; }
  bool is_leaf() const { return num_children == 0; }
};

/// Adaptive octree over a source set and a target set. In shared mode the
/// targets are the sources (same order, same ranges). Cells are stored
/// breadth-first; `levels[l]` lists the cells of level l in Morton order.
struct Tree {
  Vec3 root_center;
  double root_half_width = 0.0;
  int ncrit = kDefaultNcrit;
  bool shared = false;
  std::vector<Cell> cells;
  std::vector<std::vector<std::uint32_t>> levels;
  std::vector<std::uint32_t> source_order;  // tree position -> original source index
  std::vector<std::uint32_t> target_order;  // tree position -> original target index
  std::size_t overfull_leaves = 0;          // leaves at max depth holding more than ncrit points

  int depth() const { return static_cast<int>(levels.size()) - 1; }
  std::vector<std::uint32_t> leaves() const;
};

/// Shared-mode tree: every point is both a source and a target.
/// Requires at least one point and ncrit >= 1 (InputError otherwise).
Tree build_tree(std::span<const Vec3> points, int ncrit = kDefaultNcrit);

/// Tree over the union of two point sets. A cell splits while it holds more
/// than ncrit points (sources plus targets) and is above level 21.
Tree build_tree(std::span<const Vec3> sources, std::span<const Vec3> targets, int ncrit = kDefaultNcrit);

/// Compressed per-cell lists.
///   near(c): same-level cells adjacent to c (c included) plus coarser leaves
///            inherited from the parent's near list; leaves interact with
///            every entry by direct summation over its whole source range.
///   far(c):  children of the parent's near cells that are at c's level and
///            not adjacent to c (the multipole-to-local partners).
struct InteractionLists {
  std::vector<std::uint32_t> near_offsets;
  std::vector<std::uint32_t> near_cells;
  std::vector<std::uint32_t> far_offsets;
  std::vector<std::uint32_t> far_cells;

  std::span<const std::uint32_t> near(std::uint32_t c) const {
    return {near_cells.data() + near_offsets[c], near_offsets[c + 1] - near_offsets[c]};
  }
  std::span<const std::uint32_t> far(std::uint32_t c) const {
    return {far_cells.data() + far_offsets[c], far_offsets[c + 1] - far_offsets[c]};
  }
};

InteractionLists interaction_lists(const Tree& tree);

/// True when two cells of the same level share a face, edge or corner (or coincide).
bool adjacent_same_level(const Cell& a, const Cell& b);

/// CSV debug dump: index,level,key,cx,cy,cz,half_width,n_sources,n_targets,leaf
void dump_cells_csv(const Tree& tree, std::ostream& out);

}  // namespace fmmbem::octree
