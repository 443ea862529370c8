#include "fmmbem/octree/tree.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>

#include "fmmbem/errors.hpp"

namespace fmmbem::octree {

std::vector<std::uint32_t> Tree::leaves() const {
  std::vector<std::uint32_t> out;
  for (std::uint32_t c = 0; c < cells.size(); ++c) {
    if (cells[c].is_leaf()) out.push_back(c);
  }
  return out;
}

namespace {

int octant_of(const Vec3& p, const Vec3& center) {
  return (p.x >= center.x ? 1 : 0) | (p.y >= center.y ? 2 : 0) | (p.z >= center.z ? 4 : 0);
}

// Stable counting sort of one cell's slice by octant; returns the 9 bucket
// boundaries relative to range.begin.
std::array<std::uint32_t, 9> partition_by_octant(std::vector<Vec3>& pos, std::vector<std::uint32_t>& order,
                                                 Range range, const Vec3& center, std::vector<Vec3>& scratch_pos,
                                                 std::vector<std::uint32_t>& scratch_idx) {
  std::array<std::uint32_t, 9> bounds{};
  const auto n = range.size();
  scratch_pos.resize(n);
  scratch_idx.resize(n);
  std::array<std::uint32_t, 8> counts{};
  for (std::uint32_t i = range.begin; i < range.end; ++i) ++counts[octant_of(pos[i], center)];
  for (int o = 0; o < 8; ++o) bounds[o + 1] = bounds[o] + counts[o];
  auto cursor = bounds;
  for (std::uint32_t i = range.begin; i < range.end; ++i) {
    const auto slot = cursor[octant_of(pos[i], center)]++;
    scratch_pos[slot] = pos[i];
    scratch_idx[slot] = order[i];
  }
  std::copy(scratch_pos.begin(), scratch_pos.end(), pos.begin() + range.begin);
  std::copy(scratch_idx.begin(), scratch_idx.end(), order.begin() + range.begin);
  return bounds;
}

Tree build_impl(std::span<const Vec3> sources, std::span<const Vec3> targets, int ncrit, bool shared) {
  if (ncrit < 1) throw InputError("ncrit must be >= 1");
  if (sources.empty() && targets.empty()) throw InputError("cannot build a tree over zero points");

  Tree tree;
  tree.ncrit = ncrit;
  tree.shared = shared;

  Vec3 lo, hi;
  bool first = true;
  auto extend = [&](std::span<const Vec3> pts) {
    for (const auto& p : pts) {
      if (!is_finite(p)) throw InputError("non-finite point passed to tree construction");
      if (first) {
        lo = hi = p;
        first = false;
      }
      for (int d = 0; d < 3; ++d) {
        lo[d] = std::min(lo[d], p[d]);
        hi[d] = std::max(hi[d], p[d]);
      }
    }
  };
  extend(sources);
  extend(targets);
  const Vec3 extent = hi - lo;
  double half = 0.5 * std::max({extent.x, extent.y, extent.z});
  if (half <= 0.0) half = 0.5;
  tree.root_center = (lo + hi) * 0.5;
  tree.root_half_width = half * (1.0 + 1e-6);

  std::vector<Vec3> spos(sources.begin(), sources.end());
  std::vector<Vec3> tpos(targets.begin(), targets.end());
  tree.source_order.resize(sources.size());
  std::iota(tree.source_order.begin(), tree.source_order.end(), 0u);
  if (!shared) {
    tree.target_order.resize(targets.size());
    std::iota(tree.target_order.begin(), tree.target_order.end(), 0u);
  }

  Cell root;
  root.center = tree.root_center;
  root.half_width = tree.root_half_width;
  root.sources = {0, static_cast<std::uint32_t>(sources.size())};
  root.targets = shared ? root.sources : Range{0, static_cast<std::uint32_t>(targets.size())};
  tree.cells.push_back(root);

  std::vector<Vec3> scratch_pos;
  std::vector<std::uint32_t> scratch_idx;
  for (std::size_t ci = 0; ci < tree.cells.size(); ++ci) {
    const Cell cell = tree.cells[ci];
    const std::uint32_t count = shared ? cell.sources.size() : cell.sources.size() + cell.targets.size();
    if (count <= static_cast<std::uint32_t>(ncrit)) continue;
    if (cell.level() >= kMaxLevel) {
      ++tree.overfull_leaves;
      continue;
    }
    const auto sb = partition_by_octant(spos, tree.source_order, cell.sources, cell.center, scratch_pos, scratch_idx);
    std::array<std::uint32_t, 9> tb = sb;
    if (!shared) tb = partition_by_octant(tpos, tree.target_order, cell.targets, cell.center, scratch_pos, scratch_idx);

    const auto first_child = static_cast<std::uint32_t>(tree.cells.size());
    std::uint8_t nchild = 0;
    const double child_half = 0.5 * cell.half_width;
    for (int o = 0; o < 8; ++o) {
      const Range sr{cell.sources.begin + sb[o], cell.sources.begin + sb[o + 1]};
      const Range tr = shared ? sr : Range{cell.targets.begin + tb[o], cell.targets.begin + tb[o + 1]};
      if (sr.empty() && tr.empty()) continue;
      Cell child;
      child.key = child_key(cell.key, o);
      child.coords = {cell.coords[0] * 2 + (o & 1), cell.coords[1] * 2 + ((o >> 1) & 1),
                      cell.coords[2] * 2 + ((o >> 2) & 1)};
      child.center = cell.center + Vec3{(o & 1) ? child_half : -child_half, (o & 2) ? child_half : -child_half,
                                        (o & 4) ? child_half : -child_half};
      child.half_width = child_half;
      child.sources = sr;
      child.targets = tr;
      child.parent = static_cast<std::int32_t>(ci);
      tree.cells.push_back(child);
      ++nchild;
    }
    tree.cells[ci].first_child = first_child;
    tree.cells[ci].num_children = nchild;
  }

  if (shared) tree.target_order = tree.source_order;

  for (std::uint32_t c = 0; c < tree.cells.size(); ++c) {
    const int lvl = tree.cells[c].level();
    if (static_cast<int>(tree.levels.size()) <= lvl) tree.levels.resize(lvl + 1);
    tree.levels[lvl].push_back(c);
  }
  return tree;
}

}  // namespace

Tree build_tree(std::span<const Vec3> points, int ncrit) {
  if (points.empty()) throw InputError("cannot build a tree over zero points");
  return build_impl(points, points, ncrit, true);
}

Tree build_tree(std::span<const Vec3> sources, std::span<const Vec3> targets, int ncrit) {
  return build_impl(sources, targets, ncrit, false);
}

bool adjacent_same_level(const Cell& a, const Cell& b) {
  for (int d = 0; d < 3; ++d) {
    const auto da = static_cast<std::int64_t>(a.coords[d]);
    const auto db = static_cast<std::int64_t>(b.coords[d]);
    if (da - db > 1 || db - da > 1) return false;
  }
  return true;
}

InteractionLists interaction_lists(const Tree& tree) {
  const auto ncell = tree.cells.size();
  std::vector<std::vector<std::uint32_t>> near(ncell), far(ncell);
  near[0].push_back(0);

  // Breadth-first storage means every parent is finalized before its children.
  for (std::uint32_t p = 0; p < ncell; ++p) {
    const Cell& parent = tree.cells[p];
    for (std::uint32_t ci = parent.first_child; ci < parent.first_child + parent.num_children; ++ci) {
      const Cell& child = tree.cells[ci];
      for (auto d : near[p]) {
        const Cell& dc = tree.cells[d];
        if (dc.is_leaf()) {
          near[ci].push_back(d);
          continue;
        }
        for (std::uint32_t e = dc.first_child; e < dc.first_child + dc.num_children; ++e) {
          if (adjacent_same_level(child, tree.cells[e])) {
            near[ci].push_back(e);
          } else {
            far[ci].push_back(e);
          }
        }
      }
    }
  }

  InteractionLists lists;
  auto flatten = [ncell](const std::vector<std::vector<std::uint32_t>>& in, std::vector<std::uint32_t>& offsets,
                         std::vector<std::uint32_t>& flat) {
    offsets.assign(ncell + 1, 0);
    for (std::size_t c = 0; c < ncell; ++c) offsets[c + 1] = offsets[c] + static_cast<std::uint32_t>(in[c].size());
    flat.reserve(offsets[ncell]);
    for (const auto& v : in) flat.insert(flat.end(), v.begin(), v.end());
  };
  flatten(near, lists.near_offsets, lists.near_cells);
  flatten(far, lists.far_offsets, lists.far_cells);
  return lists;
}

void dump_cells_csv(const Tree& tree, std::ostream& out) {
  out << "index,level,key,cx,cy,cz,half_width,n_sources,n_targets,leaf\n";
  char buf[256];
  for (std::size_t c = 0; c < tree.cells.size(); ++c) {
    const auto& cell = tree.cells[c];
    std::snprintf(buf, sizeof buf, "%zu,%d,%llu,%.9g,%.9g,%.9g,%.9g,%u,%u,%d\n", c, cell.level(),
                  static_cast<unsigned long long>(cell.key.key), cell.center.x, cell.center.y, cell.center.z,
                  cell.half_width, cell.sources.size(), cell.targets.size(), cell.is_leaf() ? 1 : 0);
    out << buf;
  }
}

}  // namespace fmmbem::octree
