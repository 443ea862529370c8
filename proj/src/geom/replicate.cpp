#include "fmmbem/geom/replicate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "fmmbem/errors.hpp"

namespace fmmbem::geom {

Mat3 random_rotation(double u1, double u2, double u3) {
  const double two_pi = 2.0 * std::numbers::pi;
  const double a = std::sqrt(1.0 - u1);
  const double b = std::sqrt(u1);
  const double w = a * std::sin(two_pi * u2);
  const double x = a * std::cos(two_pi * u2);
  const double y = b * std::sin(two_pi * u3);
  const double z = b * std::cos(two_pi * u3);

  Mat3 r;
  r(0, 0) = 1 - 2 * (y * y + z * z);
  r(0, 1) = 2 * (x * y - z * w);
  r(0, 2) = 2 * (x * z + y * w);
  r(1, 0) = 2 * (x * y + z * w);
  r(1, 1) = 1 - 2 * (x * x + z * z);
  r(1, 2) = 2 * (y * z - x * w);
  r(2, 0) = 2 * (x * z - y * w);
  r(2, 1) = 2 * (y * z + x * w);
  r(2, 2) = 1 - 2 * (x * x + y * y);
  return r;
}

BoundingSphere bounding_sphere(const SurfaceMesh& mesh) {
  BoundingSphere s;
  s.center = bounding_box(mesh.vertices).center();
  for (const auto& v : mesh.vertices) s.radius = std::max(s.radius, norm(v - s.center));
  return s;
}

MolecularSystem replicate_grid(const MolecularSystem& system, int nx, int ny, int nz, double spacing,
                               std::uint64_t seed) {
  if (nx < 1 || ny < 1 || nz < 1) throw InputError("replicate counts must be positive");
  const auto sphere = bounding_sphere(system.mesh);
  const double min_spacing = 2.0 * sphere.radius;
  if (!(spacing > min_spacing)) {
    throw InputError("replicate spacing " + std::to_string(spacing) +
                     " would overlap copies; minimum safe spacing is > " + std::to_string(min_spacing));
  }

  const auto& src = system.mesh;
  const std::size_t copies = static_cast<std::size_t>(nx) * ny * nz;
  const bool with_normals = src.has_vertex_normals();

  MolecularSystem out;
  out.dielectric = system.dielectric;
  out.mesh.vertices.reserve(src.vertices.size() * copies);
  out.mesh.triangles.reserve(src.triangles.size() * copies);
  if (with_normals) out.mesh.vertex_normals.reserve(src.vertices.size() * copies);
  out.charges.reserve(system.charges.size() * copies);

  UniformStream rng(seed);
  for (int k = 0; k < nz; ++k) {
    for (int j = 0; j < ny; ++j) {
      for (int i = 0; i < nx; ++i) {
        const double u1 = rng.next();
        const double u2 = rng.next();
        const double u3 = rng.next();
        const Mat3 rot = random_rotation(u1, u2, u3);
        const Vec3 target{i * spacing, j * spacing, k * spacing};
        const auto base = static_cast<std::uint32_t>(out.mesh.vertices.size());
        for (std::size_t v = 0; v < src.vertices.size(); ++v) {
          out.mesh.vertices.push_back(target + rot * (src.vertices[v] - sphere.center));
          if (with_normals) out.mesh.vertex_normals.push_back(rot * src.vertex_normals[v]);
        }
        for (const auto& t : src.triangles) out.mesh.triangles.push_back({t[0] + base, t[1] + base, t[2] + base});
        for (const auto& c : system.charges) {
          PointCharge moved = c;
          moved.position = target + rot * (c.position - sphere.center);
          out.charges.push_back(moved);
        }
      }
    }
  }
  out.panels = derive_panels(out.mesh);
  return out;
}

}  // namespace fmmbem::geom
