#include "fmmbem/fmm/fmm.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <string>

#include "fmmbem/errors.hpp"
#include "fmmbem/fmm/expansion.hpp"
#include "fmmbem/fmm/m2l_kernel.hpp"
#include "fmmbem/fmm/p2p.hpp"
#include "fmmbem/fmm/rotation.hpp"
#include "fmmbem/parallel.hpp"

namespace fmmbem::fmm {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

constexpr double kInv4Pi = 1.0 / (4.0 * std::numbers::pi);
constexpr double kSqrt3 = std::numbers::sqrt3;

// Octant of a cell within its parent as a unit step (+-1 per axis).
std::array<int, 3> child_direction(const octree::Cell& c) {
  return {(c.coords[0] & 1) ? 1 : -1, (c.coords[1] & 1) ? 1 : -1, (c.coords[2] & 1) ? 1 : -1};
}

// Target cells per unit of downward-sweep work. Fixed, so the order in which
// a cell receives its translations does not depend on the thread count.
constexpr std::size_t kDownChunk = 64;

// Point pairs that cost about as much as one translation, from timings of
// the two kernels on one core.
double direct_pair_limit(int p, bool rotated) {
  const double q = p + 1.0;
  return rotated ? 0.35 * q * q * q : 1.0 * q * q * q * q;
}

struct M2LBatch {
  std::uint16_t rotation = 0;
  std::uint8_t lanes = 0;
  double distance = 0.0;
  std::array<std::uint32_t, kM2LLanes> source{};
  std::array<std::uint32_t, kM2LLanes> target{};
};

struct LevelPlan {
  std::vector<std::uint32_t> cells;          // cells with targets
  std::vector<std::uint32_t> batch_offsets;  // per chunk of kDownChunk cells
  std::vector<M2LBatch> batches;
};

struct SoA {
  std::vector<double> x, y, z;
  void assign(std::span<const Vec3> pts, std::span<const std::uint32_t> order) {
    const auto n = order.empty() ? pts.size() : order.size();
    x.resize(n);
    y.resize(n);
    z.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec3& p = pts[order.empty() ? i : order[i]];
      x[i] = p.x;
      y[i] = p.y;
      z[i] = p.z;
    }
  }
  P2PBlock block(std::size_t b, std::size_t e) const { return {x.data() + b, y.data() + b, z.data() + b, e - b}; }
};

struct SourceBuffer {
  std::vector<double> x, y, z, w;
  void clear() {
    x.clear();
    y.clear();
    z.clear();
    w.clear();
  }
  void append(const SoA& s, const std::vector<double>& weights, octree::Range r) {
    x.insert(x.end(), s.x.begin() + r.begin, s.x.begin() + r.end);
    y.insert(y.end(), s.y.begin() + r.begin, s.y.begin() + r.end);
    z.insert(z.end(), s.z.begin() + r.begin, s.z.begin() + r.end);
    w.insert(w.end(), weights.begin() + r.begin, weights.begin() + r.end);
  }
  P2PBlock block() const { return {x.data(), y.data(), z.data(), x.size()}; }
};

std::string describe(const Vec3& p) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.9g, %.9g, %.9g)", p.x, p.y, p.z);
  return buf;
}

void fill_normal_derivative(FieldResult& r, std::span<const Vec3> normals) {
  if (normals.empty()) return;
  r.normal_derivative.resize(r.gradient.size());
  for (std::size_t i = 0; i < r.gradient.size(); ++i) r.normal_derivative[i] = dot(r.gradient[i], normals[i]);
}

void check_targets(const TargetSet& t) {
  if (!t.normals.empty() && t.normals.size() != t.positions.size())
    throw InputError("target normals must match target positions in length");
}

}  // namespace

void FmmConfig::validate() const {
  if (order < 1 || order > kMaxOrder) throw InputError("FMM order p must be in [1, 30]");
  if (ncrit < 1) throw InputError("ncrit must be >= 1");
  if (threads < 1) throw InputError("thread count must be >= 1");
}

double relative_l2_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw InputError("relative_l2_error: length mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  if (den == 0.0) return num == 0.0 ? 0.0 : INFINITY;
  return std::sqrt(num / den);
}

FieldResult direct_evaluate(const SourceSet& sources, const TargetSet& targets, bool skip_coincident, int threads) {
  if (sources.positions.size() != sources.weights.size())
    throw InputError("source positions and weights differ in length");
  check_targets(targets);
  const auto t0 = Clock::now();
  const std::size_t nt = targets.positions.size();
  SoA src, tgt;
  src.assign(sources.positions, {});
  tgt.assign(targets.positions, {});
  std::vector<double> phi(nt, 0.0), gx(nt, 0.0), gy(nt, 0.0), gz(nt, 0.0);
  const P2PKernel kernel = p2p_kernel();
  constexpr std::size_t kBlock = 64;
  const std::size_t nblocks = (nt + kBlock - 1) / kBlock;
  std::vector<std::size_t> zeros(nblocks, 0);
  const auto sblock = src.block(0, src.x.size());
  parallel_for(nblocks, threads, false, [&](std::size_t b) {
    const std::size_t lo = b * kBlock, hi = std::min(nt, lo + kBlock);
    zeros[b] = kernel(tgt.block(lo, hi), sblock, sources.weights.data(),
                      {phi.data() + lo, gx.data() + lo, gy.data() + lo, gz.data() + lo});
  });
  if (!skip_coincident) {
    for (std::size_t b = 0; b < nblocks; ++b) {
      if (zeros[b] == 0) continue;
      for (std::size_t i = b * kBlock; i < std::min(nt, (b + 1) * kBlock); ++i) {
        for (std::size_t j = 0; j < sources.positions.size(); ++j) {
          if (targets.positions[i] == sources.positions[j])
            throw GeometryError("target " + std::to_string(i) + " coincides with source " + std::to_string(j) +
                                " at " + describe(targets.positions[i]));
        }
      }
    }
  }
  FieldResult r;
  r.potential.resize(nt);
  r.gradient.resize(nt);
  for (std::size_t i = 0; i < nt; ++i) {
    r.potential[i] = phi[i] * kInv4Pi;
    r.gradient[i] = Vec3{gx[i], gy[i], gz[i]} * kInv4Pi;
  }
  fill_normal_derivative(r, targets.normals);
  r.timings.p2p = r.timings.total = seconds_since(t0);
  return r;
}

struct Evaluator::Impl {
  FmmConfig config;
  bool shared = false;
  std::size_t nsrc = 0, ntgt = 0;
  std::vector<Vec3> target_normals;  // original order
  octree::Tree tree;
  octree::InteractionLists lists;
  std::vector<Vec3> spos;  // tree order
  SoA ssoa, tsoa;
  std::vector<Vec3> tpos;  // tree order
  std::shared_ptr<const RotationTable> rotations;
  std::vector<std::uint32_t> target_leaves;
  std::vector<std::uint8_t> has_sources;  // per cell
  std::vector<std::uint8_t> has_local;    // per cell: receives any far field
  std::vector<LevelPlan> down;            // per level
  std::vector<std::uint32_t> direct_offsets, direct_cells;  // per target leaf
  double setup_seconds = 0.0;

  void plan_downward() {
    const auto ncell = tree.cells.size();
    const bool rotated = config.use_rotation();
    const double limit = config.adaptive_direct ? direct_pair_limit(config.order, rotated) : -1.0;
    std::vector<std::uint8_t> direct(lists.far_cells.size(), 0);
    for (std::uint32_t c = 0; c < ncell; ++c) {
      const auto& t = tree.cells[c];
      if (!t.is_leaf()) continue;
      for (std::uint32_t f = lists.far_offsets[c]; f < lists.far_offsets[c + 1]; ++f) {
        const auto& s = tree.cells[lists.far_cells[f]];
        direct[f] = static_cast<double>(t.targets.size()) * s.sources.size() <= limit ? 1 : 0;
      }
    }

    has_local.assign(ncell, 0);
    down.assign(tree.levels.size(), {});
    struct Pending {
      std::uint32_t source, target;
    };
    constexpr int kOffsets = 343;
    std::vector<Pending> pending, sorted;
    std::vector<std::uint16_t> rot;
    std::array<std::uint32_t, kOffsets + 1> start{};
    for (std::size_t lvl = 1; lvl < tree.levels.size(); ++lvl) {
      LevelPlan& plan = down[lvl];
      for (const auto c : tree.levels[lvl]) {
        if (!tree.cells[c].targets.empty()) plan.cells.push_back(c);
      }
      plan.batch_offsets.push_back(0);
      for (std::size_t b = 0; b < plan.cells.size(); b += kDownChunk) {
        pending.clear();
        rot.clear();
        const std::size_t e = std::min(plan.cells.size(), b + kDownChunk);
        for (std::size_t k = b; k < e; ++k) {
          const std::uint32_t c = plan.cells[k];
          const auto& t = tree.cells[c];
          if (has_local[t.parent]) has_local[c] = 1;
          for (std::uint32_t f = lists.far_offsets[c]; f < lists.far_offsets[c + 1]; ++f) {
            const std::uint32_t s = lists.far_cells[f];
            if (!has_sources[s] || direct[f]) continue;
            const auto& sc = tree.cells[s];
            int d[3];
            for (int a = 0; a < 3; ++a)
              d[a] = static_cast<int>(static_cast<std::int64_t>(t.coords[a]) - static_cast<std::int64_t>(sc.coords[a]));
            pending.push_back({s, c});
            rot.push_back(static_cast<std::uint16_t>(RotationTable::index(d[0], d[1], d[2])));
            has_local[c] = 1;
          }
        }
        // Group translations sharing a rotation, keeping target order within
        // a group; lanes of one batch always have distinct targets because a
        // target meets each offset once.
        start.fill(0);
        for (const auto r : rot) ++start[r + 1];
        for (int r = 0; r < kOffsets; ++r) start[r + 1] += start[r];
        sorted.resize(pending.size());
        auto fill = start;
        for (std::size_t i = 0; i < pending.size(); ++i) sorted[fill[rot[i]]++] = pending[i];
        const std::size_t width = rotated ? kM2LLanes : 1;
        for (int r = 0; r < kOffsets; ++r) {
          for (std::uint32_t i = start[r]; i < start[r + 1];) {
            M2LBatch batch;
            batch.rotation = static_cast<std::uint16_t>(r);
            const auto& t0 = tree.cells[sorted[i].target];
            const auto& s0 = tree.cells[sorted[i].source];
            batch.distance = norm(t0.center - s0.center);
            while (i < start[r + 1] && batch.lanes < width) {
              batch.source[batch.lanes] = sorted[i].source;
              batch.target[batch.lanes] = sorted[i].target;
              ++batch.lanes;
              ++i;
            }
            plan.batches.push_back(batch);
          }
        }
        plan.batch_offsets.push_back(static_cast<std::uint32_t>(plan.batches.size()));
      }
    }

    direct_offsets.assign(1, 0);
    for (const auto c : target_leaves) {
      for (std::uint32_t f = lists.far_offsets[c]; f < lists.far_offsets[c + 1]; ++f) {
        if (direct[f] && has_sources[lists.far_cells[f]]) direct_cells.push_back(lists.far_cells[f]);
      }
      direct_offsets.push_back(static_cast<std::uint32_t>(direct_cells.size()));
    }
  }

  void prepare(std::span<const Vec3> sources, std::span<const Vec3> targets) {
    spos.resize(nsrc);
    for (std::size_t i = 0; i < nsrc; ++i) spos[i] = sources[tree.source_order[i]];
    ssoa.assign(sources, tree.source_order);
    const auto tsrc = shared ? sources : targets;
    tpos.resize(ntgt);
    for (std::size_t i = 0; i < ntgt; ++i) tpos[i] = tsrc[tree.target_order[i]];
    tsoa.assign(tsrc, tree.target_order);

    const auto ncell = tree.cells.size();
    has_sources.resize(ncell);
    for (std::size_t c = 0; c < ncell; ++c) {
      const auto& cell = tree.cells[c];
      has_sources[c] = cell.sources.empty() ? 0 : 1;
      if (cell.is_leaf() && !cell.targets.empty()) target_leaves.push_back(static_cast<std::uint32_t>(c));
    }

    if (config.use_rotation()) rotations = rotation_table(config.order);
    plan_downward();
  }

  FieldResult apply(std::span<const double> weights) const;
};

Evaluator::Evaluator(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
Evaluator::Evaluator(Evaluator&&) noexcept = default;
Evaluator& Evaluator::operator=(Evaluator&&) noexcept = default;
Evaluator::~Evaluator() = default;

Evaluator::Evaluator(std::span<const Vec3> sources, const TargetSet& targets, const FmmConfig& config) {
  config.validate();
  check_targets(targets);
  const auto t0 = Clock::now();
  auto impl = std::make_unique<Impl>();
  impl->config = config;
  impl->nsrc = sources.size();
  impl->ntgt = targets.positions.size();
  impl->target_normals.assign(targets.normals.begin(), targets.normals.end());
  if (impl->nsrc > 0 && impl->ntgt > 0) {
    impl->tree = octree::build_tree(sources, targets.positions, config.ncrit);
    impl->lists = octree::interaction_lists(impl->tree);
    impl->prepare(sources, targets.positions);
  }
  impl->setup_seconds = seconds_since(t0);
  impl_ = std::move(impl);
}

Evaluator Evaluator::shared(std::span<const Vec3> points, std::span<const Vec3> normals, const FmmConfig& config) {
  config.validate();
  check_targets({points, normals});
  const auto t0 = Clock::now();
  auto impl = std::make_unique<Impl>();
  impl->config = config;
  impl->shared = true;
  impl->nsrc = impl->ntgt = points.size();
  impl->target_normals.assign(normals.begin(), normals.end());
  if (!points.empty()) {
    impl->tree = octree::build_tree(points, config.ncrit);
    impl->lists = octree::interaction_lists(impl->tree);
    impl->prepare(points, points);
  }
  impl->setup_seconds = seconds_since(t0);
  return Evaluator(std::move(impl));
}

std::size_t Evaluator::num_sources() const { return impl_->nsrc; }
std::size_t Evaluator::num_targets() const { return impl_->ntgt; }
const octree::Tree& Evaluator::tree() const { return impl_->tree; }
const octree::InteractionLists& Evaluator::lists() const { return impl_->lists; }
const FmmConfig& Evaluator::config() const { return impl_->config; }
double Evaluator::setup_seconds() const { return impl_->setup_seconds; }

FieldResult Evaluator::apply(std::span<const double> weights) const { return impl_->apply(weights); }

FieldResult Evaluator::Impl::apply(std::span<const double> weights) const {
  if (weights.size() != nsrc) throw InputError("weight count does not match the source count");
  const auto t_start = Clock::now();
  FieldResult r;
  r.potential.assign(ntgt, 0.0);
  r.gradient.assign(ntgt, Vec3{});
  if (nsrc == 0 || ntgt == 0) {
    fill_normal_derivative(r, target_normals);
    return r;
  }

  const int p = config.order;
  const std::size_t nc = num_coefficients(p);
  const std::size_t ncell = tree.cells.size();
  const int threads = config.threads;
  const bool dynamic = !config.deterministic;

  std::vector<double> sw(nsrc);
  for (std::size_t i = 0; i < nsrc; ++i) sw[i] = weights[tree.source_order[i]];

  std::vector<Complex> multipole(ncell * nc), local(ncell * nc);
  auto mslot = [&](std::size_t c) { return std::span<Complex>(multipole.data() + c * nc, nc); };
  auto lslot = [&](std::size_t c) { return std::span<Complex>(local.data() + c * nc, nc); };

  // Upward sweep, finest level first.
  auto t0 = Clock::now();
  for (int lvl = tree.depth(); lvl >= 0; --lvl) {
    const auto& cells = tree.levels[lvl];
    parallel_for(cells.size(), threads, dynamic, [&](std::size_t k) {
      const std::uint32_t c = cells[k];
      const auto& cell = tree.cells[c];
      if (!has_sources[c]) return;
      if (cell.is_leaf()) {
        const auto b = cell.sources.begin, e = cell.sources.end;
        ops::p2m_accumulate(std::span<const Vec3>(spos.data() + b, e - b),
                            std::span<const double>(sw.data() + b, e - b), cell.center, p, mslot(c));
      } else {
        for (std::uint32_t ch = cell.first_child; ch < cell.first_child + cell.num_children; ++ch) {
          if (!has_sources[ch]) continue;
          const auto& child = tree.cells[ch];
          if (rotations)
            rotations->at(child_direction(child)).m2m_accumulate(mslot(ch), kSqrt3 * child.half_width, mslot(c));
          else
            ops::m2m_accumulate(mslot(ch), child.center, cell.center, p, mslot(c));
        }
      }
    });
  }
  r.timings.upward = seconds_since(t0);

  // Downward sweep: inherit from the parent, then add the far field.
  t0 = Clock::now();
  const M2LKernel m2l = m2l_kernel();
  const std::vector<Complex> zero_expansion(nc);
  for (std::size_t lvl = 1; lvl < down.size(); ++lvl) {
    const LevelPlan& plan = down[lvl];
    const std::size_t nchunks = plan.batch_offsets.size() - 1;
    parallel_for(nchunks, threads, dynamic, [&](std::size_t k) {
      const std::size_t e = std::min(plan.cells.size(), (k + 1) * kDownChunk);
      for (std::size_t i = k * kDownChunk; i < e; ++i) {
        const std::uint32_t c = plan.cells[i];
        const auto parent = tree.cells[c].parent;
        if (!has_local[parent]) continue;
        const auto& child = tree.cells[c];
        if (rotations)
          rotations->at(child_direction(child)).l2l_accumulate(lslot(parent), kSqrt3 * child.half_width, lslot(c));
        else
          ops::l2l_accumulate(lslot(parent), tree.cells[parent].center, child.center, p, lslot(c));
      }
      std::vector<Complex> spill(rotations ? kM2LLanes * nc : 0);
      for (std::uint32_t b = plan.batch_offsets[k]; b < plan.batch_offsets[k + 1]; ++b) {
        const M2LBatch& batch = plan.batches[b];
        if (!rotations) {
          const auto s = batch.source[0], c = batch.target[0];
          ops::m2l_accumulate(mslot(s), tree.cells[s].center, tree.cells[c].center, p, lslot(c));
          continue;
        }
        const Complex* in[kM2LLanes];
        Complex* out[kM2LLanes];
        for (int l = 0; l < kM2LLanes; ++l) {
          if (l < batch.lanes) {
            in[l] = multipole.data() + batch.source[l] * nc;
            out[l] = local.data() + batch.target[l] * nc;
          } else {
            in[l] = zero_expansion.data();
            out[l] = spill.data() + l * nc;
          }
        }
        m2l(rotations->at_index(batch.rotation).data(), in, batch.distance, out);
      }
    });
  }
  r.timings.m2l = seconds_since(t0);

  // Evaluation: local expansion plus near-field sums, owned per target leaf.
  t0 = Clock::now();
  std::vector<double> phi(ntgt, 0.0), gx(ntgt, 0.0), gy(ntgt, 0.0), gz(ntgt, 0.0);
  const P2PKernel kernel = p2p_kernel();
  std::vector<std::size_t> excess(target_leaves.size(), 0);
  parallel_for(target_leaves.size(), threads, dynamic, [&](std::size_t k) {
    const std::uint32_t c = target_leaves[k];
    const auto& cell = tree.cells[c];
    const auto tb = cell.targets.begin, te = cell.targets.end;
    if (has_local[c]) {
      Complex scratch[num_coefficients(kMaxOrder)];
      for (auto i = tb; i < te; ++i) {
        const auto pg = ops::l2p(lslot(c), cell.center, p, tpos[i], std::span<Complex>(scratch, nc));
        phi[i] += pg.potential;
        gx[i] += pg.gradient.x;
        gy[i] += pg.gradient.y;
        gz[i] += pg.gradient.z;
      }
    }
    // All direct sources of the leaf (far cells summed exactly, then the
    // near list) are gathered into one block for a single kernel call.
    thread_local SourceBuffer buf;
    buf.clear();
    for (std::uint32_t d = direct_offsets[k]; d < direct_offsets[k + 1]; ++d)
      buf.append(ssoa, sw, tree.cells[direct_cells[d]].sources);
    std::size_t expected = 0;
    for (const std::uint32_t s : lists.near(c)) {
      const auto& sc = tree.cells[s];
      if (sc.sources.empty()) continue;
      buf.append(ssoa, sw, sc.sources);
      if (shared && s == c) expected += cell.targets.size();
    }
    const std::size_t zeros =
        kernel(tsoa.block(tb, te), buf.block(), buf.w.data(),
               {phi.data() + tb, gx.data() + tb, gy.data() + tb, gz.data() + tb});
    excess[k] = zeros - expected;
  });
  r.timings.p2p = seconds_since(t0);

  for (std::size_t k = 0; k < target_leaves.size(); ++k) {
    if (excess[k] == 0) continue;
    const auto& cell = tree.cells[target_leaves[k]];
    for (const std::uint32_t s : lists.near(target_leaves[k])) {
      const auto& sc = tree.cells[s];
      for (auto i = cell.targets.begin; i < cell.targets.end; ++i) {
        for (auto j = sc.sources.begin; j < sc.sources.end; ++j) {
          if (shared && i == j) continue;
          if (tpos[i] == spos[j]) {
            const auto ti = tree.target_order[i], sj = tree.source_order[j];
            if (shared)
              throw GeometryError("points " + std::to_string(std::min(ti, sj)) + " and " +
                                  std::to_string(std::max(ti, sj)) + " coincide at " + describe(tpos[i]));
            throw GeometryError("target " + std::to_string(ti) + " coincides with source " + std::to_string(sj) +
                                " at " + describe(tpos[i]));
          }
        }
      }
    }
  }

  for (std::size_t i = 0; i < ntgt; ++i) {
    const auto o = tree.target_order[i];
    r.potential[o] = phi[i] * kInv4Pi;
    r.gradient[o] = Vec3{gx[i], gy[i], gz[i]} * kInv4Pi;
  }
  fill_normal_derivative(r, target_normals);
  r.timings.total = seconds_since(t_start);
  return r;
}

FieldResult evaluate(const SourceSet& sources, const TargetSet& targets, const FmmConfig& config) {
  if (sources.positions.size() != sources.weights.size())
    throw InputError("source positions and weights differ in length");
  const auto t0 = Clock::now();
  const bool same = sources.positions.data() == targets.positions.data() &&
                    sources.positions.size() == targets.positions.size();
  const Evaluator ev = same ? Evaluator::shared(sources.positions, targets.normals, config)
                            : Evaluator(sources.positions, targets, config);
  FieldResult r = ev.apply(sources.weights);
  r.timings.tree = ev.setup_seconds();
  r.timings.total = seconds_since(t0);
  return r;
}

}  // namespace fmmbem::fmm
