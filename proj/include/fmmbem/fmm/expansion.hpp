#pragma once

#include <span>
#include <vector>

#include "fmmbem/fmm/harmonics.hpp"
#include "fmmbem/fmm/rotation.hpp"

namespace fmmbem::fmm {

// Expansions represent sums of w_j / |x - x_j| (no 1/(4 pi); the evaluator
// applies it once at the end).
//
//   multipole about c:  phi(x) = sum_{n,m} M_n^m I_n^m(x - c),   M_n^m = sum_j w_j conj(R_n^m(x_j - c))
//   local about c:      phi(x) = sum_{n,m} L_n^m R_n^m(x - c)
//
// Only m >= 0 is stored; negative orders follow from coeff_at.

enum class ExpansionKind { multipole, local };

class Expansion {
 public:
  Expansion(int order, const Vec3& center, ExpansionKind kind);

  int order() const { return order_; }
  const Vec3& center() const { return center_; }
  ExpansionKind kind() const { return kind_; }

  Complex& operator()(int n, int m) { return coeffs_[coeff_index(n, m)]; }
  Complex operator()(int n, int m) const { return coeff_at(coeffs_, n, m); }

  std::span<Complex> coefficients() { return coeffs_; }
  std::span<const Complex> coefficients() const { return coeffs_; }

  /// sqrt(sum over stored entries of |c|^2), counting m > 0 twice.
  double norm() const;

 private:
  int order_;
  Vec3 center_;
  ExpansionKind kind_;
  std::vector<Complex> coeffs_;
};

struct PotentialGradient {
  double potential = 0.0;
  Vec3 gradient;
};

// Span-level operators. All *_accumulate functions add into `out`.
namespace ops {

void p2m_accumulate(std::span<const Vec3> positions, std::span<const double> weights, const Vec3& center, int p,
                    std::span<Complex> out);

void m2m_accumulate(std::span<const Complex> child, const Vec3& child_center, const Vec3& parent_center, int p,
                    std::span<Complex> out);

/// Plain O(p^4) multipole-to-local translation.
void m2l_accumulate(std::span<const Complex> multipole, const Vec3& source_center, const Vec3& target_center, int p,
                    std::span<Complex> out);

/// O(p^3) translation along +z by `distance` between expansions already
/// expressed in a frame where the target centre lies on the source's +z axis.
void m2l_axial(std::span<const Complex> multipole, double distance, int p, std::span<Complex> out);

/// Rotate, translate along the axis, rotate back; the order comes from `rotation`.
void m2l_rotated_accumulate(std::span<const Complex> multipole, const ZAlignRotation& rotation, double distance,
                            std::span<Complex> out);

void l2l_accumulate(std::span<const Complex> parent, const Vec3& parent_center, const Vec3& child_center, int p,
                    std::span<Complex> out);

/// Potential and gradient of a local expansion at `x`. `scratch` holds num_coefficients(p).
PotentialGradient l2p(std::span<const Complex> local, const Vec3& center, int p, const Vec3& x,
                      std::span<Complex> scratch);

/// Direct evaluation of a multipole expansion at a far point.
PotentialGradient m2p(std::span<const Complex> multipole, const Vec3& center, int p, const Vec3& x);

}  // namespace ops

Expansion p2m(std::span<const Vec3> positions, std::span<const double> weights, const Vec3& center, int p);
Expansion m2m(const Expansion& child, const Vec3& parent_center);
Expansion m2l(const Expansion& multipole, const Vec3& target_center);
/// Same translation through the z-aligned rotation path.
Expansion m2l_rotated(const Expansion& multipole, const Vec3& target_center);
Expansion l2l(const Expansion& parent, const Vec3& child_center);
PotentialGradient l2p(const Expansion& local, const Vec3& x);
PotentialGradient m2p(const Expansion& multipole, const Vec3& x);

}  // namespace fmmbem::fmm
