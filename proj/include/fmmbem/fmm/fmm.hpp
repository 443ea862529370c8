#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fmmbem/fmm/harmonics.hpp"
#include "fmmbem/octree/tree.hpp"
#include "fmmbem/vec3.hpp"

namespace fmmbem::fmm {

// Kernel: K(y, x) = 1 / (4 pi |y - x|). Potentials, gradients (with respect
// to the target) and normal derivatives all carry the 1/(4 pi).

struct SourceSet {
  std::span<const Vec3> positions;
  std::span<const double> weights;
};

struct TargetSet {
  std::span<const Vec3> positions;
  std::span<const Vec3> normals;  // empty, or one unit normal per target
};

enum class M2LMode {
  automatic,  // rotated for p >= 8, plain below
  rotated,    // O(p^3): rotate onto the z axis, translate, rotate back
  plain,      // O(p^4) direct translation
};

struct FmmConfig {
  int order = 8;
  int ncrit = octree::kDefaultNcrit;
  M2LMode m2l = M2LMode::automatic;
  // Every output is written by one worker in a fixed order, so results are
  // bit-identical for any thread count. This flag only picks static blocks
  // (on) or dynamic chunking (off) for the work split.
  bool deterministic = true;
  int threads = 1;
  // A far-list cell whose target is a leaf is summed directly instead of
  // through M2L and L2P when the number of point pairs is below the
  // estimated cost of one translation. Exact, and only ever more accurate.
  bool adaptive_direct = true;

  bool use_rotation() const { return m2l == M2LMode::rotated || (m2l == M2LMode::automatic && order >= 8); }
  void validate() const;
};

struct PhaseTimings {
  double tree = 0.0;
  double upward = 0.0;  // P2M + M2M
  double m2l = 0.0;     // M2L + L2L
  double p2p = 0.0;     // P2P + L2P
  double total = 0.0;
};

struct FieldResult {
  std::vector<double> potential;
  std::vector<Vec3> gradient;
  std::vector<double> normal_derivative;  // filled iff target normals were given
  PhaseTimings timings;
};

/// O(N M) reference sum. Zero-distance pairs are skipped when
/// skip_coincident is set and raise GeometryError otherwise.
FieldResult direct_evaluate(const SourceSet& sources, const TargetSet& targets, bool skip_coincident,
                            int threads = 1);

/// Tree, interaction lists and translation tables for fixed geometry; each
/// apply() runs one full sweep for a new set of source weights.
///
/// In shared mode the targets are the sources themselves and each point's
/// own contribution is left out. Any other zero-distance pair is a
/// GeometryError naming both indices.
class Evaluator {
 public:
  Evaluator(std::span<const Vec3> sources, const TargetSet& targets, const FmmConfig& config);
  static Evaluator shared(std::span<const Vec3> points, std::span<const Vec3> normals, const FmmConfig& config);

  Evaluator(Evaluator&&) noexcept;
  Evaluator& operator=(Evaluator&&) noexcept;
  ~Evaluator();

  FieldResult apply(std::span<const double> weights) const;

  std::size_t num_sources() const;
  std::size_t num_targets() const;
  const octree::Tree& tree() const;
  const octree::InteractionLists& lists() const;
  const FmmConfig& config() const;
  double setup_seconds() const;

 private:
  struct Impl;
  explicit Evaluator(std::unique_ptr<Impl> impl);
  std::unique_ptr<Impl> impl_;
};

/// One-shot evaluation. If targets.positions is the very same array as
/// sources.positions the shared mode is used.
FieldResult evaluate(const SourceSet& sources, const TargetSet& targets, const FmmConfig& config);

/// ||a - b||_2 / ||b||_2.
double relative_l2_error(std::span<const double> a, std::span<const double> b);

}  // namespace fmmbem::fmm
