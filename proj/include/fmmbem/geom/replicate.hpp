#pragma once

#include <cstdint>
#include <random>

#include "fmmbem/geom/mesh.hpp"

namespace fmmbem::geom {

/// Uniform random rotation from three uniform deviates in [0, 1)
/// (Shoemake's subgroup algorithm, unit quaternion -> rotation matrix).
Mat3 random_rotation(double u1, double u2, double u3);

/// Bit-portable stream of uniform doubles in [0, 1): the top 53 bits of a
/// std::mt19937_64 draw, scaled by 2^-53.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}
  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

struct BoundingSphere {
  Vec3 center;
  double radius = 0.0;
};

/// Sphere centred on the bounding-box centre, enclosing every vertex.
BoundingSphere bounding_sphere(const SurfaceMesh& mesh);

/// nx*ny*nz copies of `system`, each rotated about its bounding-sphere centre
/// by an independent random rotation and placed on a cubic grid with the
/// given spacing. Copy (i, j, k) is emitted in x-fastest order and consumes
/// three deviates. Throws InputError when spacing does not exceed the
/// bounding-sphere diameter.
MolecularSystem replicate_grid(const MolecularSystem& system, int nx, int ny, int nz, double spacing,
                               std::uint64_t seed);

}  // namespace fmmbem::geom
