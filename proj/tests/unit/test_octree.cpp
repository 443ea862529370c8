#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "fmmbem/errors.hpp"
#include "fmmbem/octree/morton.hpp"
#include "fmmbem/octree/tree.hpp"

using namespace fmmbem;
using namespace fmmbem::octree;

namespace {

std::vector<Vec3> random_points(std::size_t n, std::uint64_t seed, bool clustered = false) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> nd(0.0, 0.02);
  std::vector<Vec3> p(n);
  for (auto& x : p) x = clustered && u(g) < 0.7 ? Vec3{0.3 + nd(g), 0.6 + nd(g), 0.5 + nd(g)} : Vec3{u(g), u(g), u(g)};
  return p;
}

bool inside(const Cell& c, const Vec3& x) {
  const double h = c.half_width * (1.0 + 1e-12);
  return std::abs(x.x - c.center.x) <= h && std::abs(x.y - c.center.y) <= h && std::abs(x.z - c.center.z) <= h;
}

// Every (target leaf, source) pair must be handled exactly once: directly via
// the leaf's near list or through a far-list expansion of the leaf or one of
// its ancestors.
void check_partition(const Tree& t, const InteractionLists& l) {
  const std::size_t ns = t.source_order.size();
  for (const auto leaf : t.leaves()) {
    if (t.cells[leaf].targets.empty()) continue;
    std::vector<int> seen(ns, 0);
    for (const auto c : l.near(leaf)) {
      for (auto i = t.cells[c].sources.begin; i < t.cells[c].sources.end; ++i) ++seen[i];
    }
    for (std::int32_t a = static_cast<std::int32_t>(leaf); a >= 0; a = t.cells[a].parent) {
      for (const auto c : l.far(static_cast<std::uint32_t>(a))) {
        CHECK_FALSE(adjacent_same_level(t.cells[c], t.cells[a]));
        for (auto i = t.cells[c].sources.begin; i < t.cells[c].sources.end; ++i) ++seen[i];
      }
    }
    for (std::size_t i = 0; i < ns; ++i) {
      if (seen[i] != 1) {
        FAIL("leaf " << leaf << " sees source position " << i << " " << seen[i] << " times");
      }
    }
  }
}

}  // namespace

TEST_CASE("morton round trip and parent/child") {
  std::mt19937_64 g(3);
  for (int level : {0, 1, 5, 10, 21}) {
    const std::uint32_t n = 1u << level;
    for (int k = 0; k < 200; ++k) {
      const std::uint32_t ix = g() % n, iy = g() % n, iz = g() % n;
      const auto key = morton_encode(ix, iy, iz, level);
      CHECK(morton_decode(key) == std::array<std::uint32_t, 3>{ix, iy, iz});
      if (level > 0) {
        const auto p = morton_decode(parent_key(key));
        CHECK(p == std::array<std::uint32_t, 3>{ix / 2, iy / 2, iz / 2});
        const int octant = static_cast<int>((ix & 1) | (iy & 1) << 1 | (iz & 1) << 2);
        CHECK(child_key(parent_key(key), octant) == key);
      }
    }
  }
  CHECK(morton_encode(1, 0, 0, 1).key == 1);
  CHECK(morton_encode(0, 1, 0, 1).key == 2);
  CHECK(morton_encode(0, 0, 1, 1).key == 4);
  CHECK_THROWS_AS(morton_encode(2, 0, 0, 1), InputError);
  CHECK_THROWS_AS(morton_encode(0, 0, 0, 22), InputError);
}

TEST_CASE("shared tree: leaves partition the points and respect ncrit") {
  for (bool clustered : {false, true}) {
    const auto pts = random_points(5000, 11, clustered);
    const auto t = build_tree(pts, 32);
    CHECK(t.shared);
    CHECK(t.overfull_leaves == 0);
    std::vector<int> count(pts.size(), 0);
    for (const auto leaf : t.leaves()) {
      const Cell& c = t.cells[leaf];
      CHECK(c.sources.size() <= 32u);
      CHECK(c.sources.begin == c.targets.begin);
      for (auto i = c.sources.begin; i < c.sources.end; ++i) {
        ++count[t.source_order[i]];
        CHECK(inside(c, pts[t.source_order[i]]));
      }
    }
    for (int k : count) CHECK(k == 1);
    // Parents hold exactly their children's ranges.
    for (const Cell& c : t.cells) {
      if (c.is_leaf()) continue;
      std::uint32_t n = 0;
      for (int k = 0; k < c.num_children; ++k) {
        const Cell& ch = t.cells[c.first_child + k];
        CHECK(ch.level() == c.level() + 1);
        CHECK(ch.half_width == doctest::Approx(c.half_width / 2));
        n += ch.sources.size();
      }
      CHECK(n == c.sources.size());
    }
    check_partition(t, interaction_lists(t));
  }
}

TEST_CASE("separate source and target sets") {
  const auto s = random_points(3000, 5, true);
  const auto tg = random_points(1000, 6);
  const auto t = build_tree(s, tg, 40);
  CHECK_FALSE(t.shared);
  std::size_t ns = 0, nt = 0;
  for (const auto leaf : t.leaves()) {
    const Cell& c = t.cells[leaf];
    CHECK(c.sources.size() + c.targets.size() <= 40u);
    ns += c.sources.size();
    nt += c.targets.size();
    for (auto i = c.targets.begin; i < c.targets.end; ++i) CHECK(inside(c, tg[t.target_order[i]]));
  }
  CHECK(ns == s.size());
  CHECK(nt == tg.size());
  check_partition(t, interaction_lists(t));
}

TEST_CASE("single cell and coincident points") {
  const std::vector<Vec3> few{{0, 0, 0}, {1, 1, 1}, {0.5, 0.2, 0.1}};
  const auto t = build_tree(few, 64);
  CHECK(t.cells.size() == 1);
  CHECK(t.depth() == 0);
  const auto l = interaction_lists(t);
  CHECK(l.near(0).size() == 1);
  CHECK(l.far(0).empty());

  // More coincident points than ncrit cannot be split: the tree stops at the
  // maximum level and reports the overfull leaf.
  const std::vector<Vec3> same(10, Vec3{0.25, 0.25, 0.25});
  std::vector<Vec3> pts = same;
  pts.push_back({0.9, 0.9, 0.9});
  const auto td = build_tree(pts, 4);
  CHECK(td.overfull_leaves == 1);
  CHECK(td.depth() == kMaxLevel);

  CHECK_THROWS_AS(build_tree(std::vector<Vec3>{}, 8), InputError);
  CHECK_THROWS_AS(build_tree(few, 0), InputError);
}

TEST_CASE("adjacency and debug dump") {
  const auto pts = random_points(2000, 9);
  const auto t = build_tree(pts, 16);
  const auto& lv = t.levels[2];
  for (const auto a : lv) {
    for (const auto b : lv) {
      const auto ca = t.cells[a].coords, cb = t.cells[b].coords;
      bool adj = true;
      for (int d = 0; d < 3; ++d) adj = adj && std::abs(int(ca[d]) - int(cb[d])) <= 1;
      CHECK(adjacent_same_level(t.cells[a], t.cells[b]) == adj);
    }
  }
  std::ostringstream os;
  dump_cells_csv(t, os);
  const auto s = os.str();
  CHECK(s.rfind("index,level,key,cx,cy,cz,half_width,n_sources,n_targets,leaf\n", 0) == 0);
  CHECK(static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')) == t.cells.size() + 1);
}
