#pragma once

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

#include "fmmbem/fmm/fmm.hpp"
#include "fmmbem/geom/mesh.hpp"

namespace fmmbem::bem {

// Discrete boundary operators with one-point (centroid) collocation. Panel j
// acts as a point source of strength area_j * sigma_j at its centroid:
//
//   E_n = B q        E_n(c_i) = (1/eps_in) sum_k q_k d/dn_i G(c_i, r_k)
//   K' sigma         (K' sigma)(c_i) = sum_{j != i} area_j sigma_j d/dn_i G(c_i, c_j) + K'_ii sigma_i
//   A sigma          sigma - f K' sigma,  f = 2 (eps_out - eps_in) / (eps_in + eps_out)
//   C sigma          phi_reac(r_k) = sum_j area_j sigma_j G(r_k, c_j)
//
// with G(x, y) = 1 / (4 pi |x - y|). The system solved is A sigma = f B q.

/// Diagonal of K'. `flat` is the plain principal value of a flat panel (zero).
/// `curvature` integrates the kernel over a disc of the panel's area lying on
/// a surface with the panel's mean curvature H, which gives -H sqrt(A / pi) / 4.
enum class SelfTerm { curvature, flat };

struct OperatorOptions {
  fmm::FmmConfig fmm;
  SelfTerm self_term = SelfTerm::curvature;
  /// Off: every application is an exact O(N M) direct sum.
  bool use_fmm = true;
};

/// f = 2 (eps_out - eps_in) / (eps_in + eps_out).
double polarization_factor(const geom::DielectricModel& eps);

/// 1 - eps_in / eps_out, the Born-sphere ratio sigma / E_n.
double eps_hat(const geom::DielectricModel& eps);

/// K'_ii for every panel under the given rule.
std::vector<double> self_terms(const geom::PanelSet& panels, SelfTerm rule);

/// Throws GeometryError naming the first pair of panels with identical
/// centroids, or the first charge sitting exactly on a centroid.
void check_collocation(const geom::PanelSet& panels, std::span<const geom::PointCharge> charges);

/// Matrix-free operators for one system. The octrees and translation plans
/// for the three source/target pairings are built once, on first use.
class OperatorContext {
 public:
  OperatorContext(const geom::MolecularSystem& system, const OperatorOptions& options);
  ~OperatorContext();
  OperatorContext(OperatorContext&&) noexcept;
  OperatorContext& operator=(OperatorContext&&) noexcept;

  std::size_t num_panels() const;
  std::size_t num_charges() const;
  double f() const { return f_; }
  const geom::DielectricModel& dielectric() const { return eps_; }
  const OperatorOptions& options() const { return options_; }
  std::span<const double> diagonal() const { return self_; }

  /// E_n for the charge values q (one per charge; the system's own charges
  /// when q is empty).
  std::vector<double> apply_B(std::span<const double> q = {}) const;
  std::vector<double> apply_Kprime(std::span<const double> sigma) const;
  std::vector<double> apply_A(std::span<const double> sigma) const;
  /// Reaction potential at every charge position.
  std::vector<double> apply_C(std::span<const double> sigma) const;

  /// Sum of the phase timings of every application so far, with tree and
  /// plan construction under `tree`.
  fmm::PhaseTimings timings() const { return timings_; }
  /// Number of N-body evaluations (FMM or direct) performed so far.
  int evaluations() const { return evaluations_; }

 private:
  struct Cache;
  void record(const fmm::FieldResult& r) const;

  OperatorOptions options_;
  geom::DielectricModel eps_;
  double f_ = 0.0;
  std::vector<Vec3> centroids_, normals_, charge_positions_;
  std::vector<double> areas_, charge_values_, self_;
  std::unique_ptr<Cache> cache_;
  mutable fmm::PhaseTimings timings_;
  mutable int evaluations_ = 0;
};

// Dense row-major matrices by explicit double loops, for checking the
// matrix-free paths on small systems.
struct DenseMatrix {
  std::size_t rows = 0, cols = 0;
  std::vector<double> data;
  double operator()(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
  std::vector<double> multiply(std::span<const double> x) const;
};

DenseMatrix dense_B(const geom::PanelSet& panels, std::span<const geom::PointCharge> charges,
                    const geom::DielectricModel& eps);
DenseMatrix dense_Kprime(const geom::PanelSet& panels, SelfTerm rule);
DenseMatrix dense_A(const geom::PanelSet& panels, const geom::DielectricModel& eps, SelfTerm rule);
DenseMatrix dense_C(const geom::PanelSet& panels, std::span<const geom::PointCharge> charges);

}  // namespace fmmbem::bem
