#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fmmbem/vec3.hpp"

namespace fmmbem::geom {

using Triangle = std::array<std::uint32_t, 3>;

/// Triangulated dielectric boundary. Indices are 0-based; `vertex_normals` is
/// either empty or has one entry per vertex.
struct SurfaceMesh {
  std::vector<Vec3> vertices;
  std::vector<Triangle> triangles;
  std::vector<Vec3> vertex_normals;

  std::size_t num_vertices() const { return vertices.size(); }
  std::size_t num_triangles() const { return triangles.size(); }
  bool has_vertex_normals() const { return !vertex_normals.empty(); }

  /// Throws InputError if an index is out of range or a coordinate is not finite.
  void validate() const;
};

/// Per-panel collocation data. Normals point out of the solute (into the solvent).
/// `mean_curvature` is the estimated mean curvature at each panel; positive on
/// convex patches of an outward-wound surface.
struct PanelSet {
  std::vector<Vec3> centroid;
  std::vector<Vec3> normal;
  std::vector<double> area;
  std::vector<double> mean_curvature;

  std::size_t size() const { return area.size(); }
  double total_area() const;
};

struct PointCharge {
  Vec3 position;
  double charge = 0.0;
  double radius = 0.0;
};

using ChargeSet = std::vector<PointCharge>;

struct DielectricModel {
  double eps_in = 4.0;
  double eps_out = 80.0;

  /// Throws InputError unless both permittivities are positive and distinct.
  void validate() const;
  friend bool operator==(const DielectricModel&, const DielectricModel&) = default;
};

struct MolecularSystem {
  SurfaceMesh mesh;
  PanelSet panels;
  ChargeSet charges;
  DielectricModel dielectric;
};

/// Centroid, unit normal (right-hand winding), area and mean-curvature estimate
/// for every triangle. Throws GeometryError naming the first degenerate
/// triangle (area below 1e-14 times the squared bounding-box diagonal).
PanelSet derive_panels(const SurfaceMesh& mesh);

/// Convenience: mesh + charges -> system with panels derived.
MolecularSystem make_system(SurfaceMesh mesh, ChargeSet charges, DielectricModel dielectric = {});

/// Regular icosahedron subdivided `subdivisions` times with vertices projected
/// onto the sphere of the given radius centred at `center`. Outward winding,
/// exact vertex normals.
SurfaceMesh icosphere(double radius, int subdivisions, Vec3 center = {});

/// Latitude-longitude sphere: `bands` latitude bands of `segments` cells each,
/// triangle fans at the poles. 2 * segments * (bands - 1) triangles.
SurfaceMesh uv_sphere(double radius, int segments, int bands, Vec3 center = {});

/// Enclosed volume from the divergence theorem; negative for inward winding.
double signed_volume(const SurfaceMesh& mesh);

struct OrientationReport {
  double signed_volume = 0.0;
  bool outward = true;
};

OrientationReport check_orientation(const SurfaceMesh& mesh);

/// Reverses the winding of every triangle and negates vertex normals.
void flip_orientation(SurfaceMesh& mesh);

/// Generalized winding number of a closed mesh about `point`:
/// ~1 inside an outward-wound surface, ~0 outside.
double winding_number(const SurfaceMesh& mesh, const Vec3& point);

/// Indices of charges whose winding number is below 0.5 (i.e. not enclosed).
std::vector<std::size_t> charges_outside(const SurfaceMesh& mesh, std::span<const PointCharge> charges);

struct BoundingBox {
  Vec3 lo;
  Vec3 hi;
  double diagonal() const { return norm(hi - lo); }
  Vec3 center() const { return (lo + hi) * 0.5; }
};

BoundingBox bounding_box(std::span<const Vec3> points);

}  // namespace fmmbem::geom
