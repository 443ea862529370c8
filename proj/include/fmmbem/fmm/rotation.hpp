#pragma once

#include <array>
#include <memory>
#include <span>
#include <vector>

#include "fmmbem/fmm/harmonics.hpp"

namespace fmmbem::fmm {

/// Dense rotation matrices of the regular harmonics: for each degree n,
/// R_n^m(Q x) = sum_{m'} D[n](m, m') R_n^{m'}(x), with m, m' in [-n, n] and
/// row-major storage at (m + n) * (2n + 1) + (m' + n). Computed by a product
/// Gauss-Legendre x trapezoid rule that integrates degree-2p spherical
/// polynomials exactly.
std::vector<std::vector<Complex>> harmonic_rotation_matrices(const Mat3& q, int p);

/// Raw view of a ZAlignRotation for the translation kernels.
struct RotationData {
  int p;
  const double* phase_re;
  const double* phase_im;
  const std::size_t* offset;
  const double* fwd_re;  // per degree, row-major (m, m')
  const double* fwd_im;
  const double* bwd_re;  // per degree, row-major (m', m)
  const double* bwd_im;
};

/// Rotation taking a given direction onto +z (Q = R_y(-beta) R_z(-alpha)),
/// applied to real-field expansions stored for m >= 0. Each application costs
/// O(p^3): a diagonal phase followed by a real matrix per degree.
class ZAlignRotation {
 public:
  ZAlignRotation() = default;
  ZAlignRotation(const Vec3& direction, int p);

  int order() const { return p_; }
  RotationData data() const;

  /// Multipole coefficients about the same centre, expressed in the rotated frame.
  void to_aligned(std::span<const Complex> in, std::span<Complex> out) const;

  /// Adds a local expansion given in the rotated frame back into the original frame.
  void accumulate_from_aligned(std::span<const Complex> in, std::span<Complex> out) const;

  /// Multipole-to-local translation by `distance` along the rotated axis,
  /// added into `out`. Same result as to_aligned, m2l_axial and
  /// accumulate_from_aligned in sequence, in one pass.
  void m2l_accumulate(std::span<const Complex> multipole, double distance, std::span<Complex> out) const;

  /// kM2LLanes independent translations with this rotation and distance:
  /// multipoles[l] (order p) is added into out[l]. Entries of `out` must be
  /// distinct.
  void m2l_accumulate_lanes(const Complex* const* multipoles, double distance, Complex* const* out) const;

  /// Multipole re-centred `distance` back along the rotated axis, i.e. the
  /// old centre lies at +distance on the axis from the new one.
  void m2m_accumulate(std::span<const Complex> multipole, double distance, std::span<Complex> out) const;

  /// Local expansion re-centred at +distance along the rotated axis.
  void l2l_accumulate(std::span<const Complex> local, double distance, std::span<Complex> out) const;

 private:
  friend class RotationTable;
  ZAlignRotation(double alpha, int p, const std::vector<std::vector<double>>& d);
  void init(double alpha, const std::vector<std::vector<double>>& d);

  int p_ = 0;
  std::vector<double> phase_re_, phase_im_;  // e^{i m alpha}, m = 0..p
  // Folded real matrices per degree, (n+1)^2 entries each at offset_[n].
  std::vector<std::size_t> offset_;
  std::vector<double> fwd_re_, fwd_im_, bwd_re_, bwd_im_;
};

/// Real rotation matrices about the y axis, D[n] as in harmonic_rotation_matrices.
std::vector<std::vector<double>> y_rotation_matrices(double beta, int p);

/// Rotations for every same-level M2L offset (dx, dy, dz) in [-3, 3]^3.
class RotationTable {
 public:
  explicit RotationTable(int p);
  int order() const { return p_; }
  const ZAlignRotation& at(int dx, int dy, int dz) const { return table_[index(dx, dy, dz)]; }
  const ZAlignRotation& at(const std::array<int, 3>& d) const { return at(d[0], d[1], d[2]); }
  const ZAlignRotation& at_index(int i) const { return table_[static_cast<std::size_t>(i)]; }
  static constexpr int index(int dx, int dy, int dz) { return (dx + 3) + 7 * (dy + 3) + 49 * (dz + 3); }

 private:
  int p_;
  std::array<ZAlignRotation, 343> table_;
};

/// Process-wide cache, one table per order. Thread-safe.
std::shared_ptr<const RotationTable> rotation_table(int p);

}  // namespace fmmbem::fmm
