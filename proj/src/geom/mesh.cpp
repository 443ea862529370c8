#include "fmmbem/geom/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <string>
#include <utility>

#include "fmmbem/errors.hpp"

namespace fmmbem::geom {

void SurfaceMesh::validate() const {
  const auto nv = vertices.size();
  if (!vertex_normals.empty() && vertex_normals.size() != nv) {
    throw InputError("vertex normal count " + std::to_string(vertex_normals.size()) +
                     " does not match vertex count " + std::to_string(nv));
  }
  for (std::size_t i = 0; i < nv; ++i) {
    if (!is_finite(vertices[i])) throw InputError("vertex " + std::to_string(i) + " is not finite");
  }
  for (std::size_t t = 0; t < triangles.size(); ++t) {
    for (auto idx : triangles[t]) {
      if (idx >= nv) {
        throw InputError("triangle " + std::to_string(t) + " references vertex " + std::to_string(idx) +
                         " but the mesh has " + std::to_string(nv) + " vertices");
      }
    }
  }
}

double PanelSet::total_area() const {
  double s = 0.0;
  for (double a : area) s += a;
  return s;
}

void DielectricModel::validate() const {
  if (!(eps_in > 0.0) || !(eps_out > 0.0)) throw InputError("permittivities must be positive");
  if (eps_in == eps_out) throw InputError("eps_in and eps_out must differ");
}

BoundingBox bounding_box(std::span<const Vec3> points) {
  BoundingBox box;
  if (points.empty()) return box;
  box.lo = box.hi = points[0];
  for (const auto& p : points) {
    for (int d = 0; d < 3; ++d) {
      box.lo[d] = std::min(box.lo[d], p[d]);
      box.hi[d] = std::max(box.hi[d], p[d]);
    }
  }
  return box;
}

namespace {

std::vector<Vec3> area_weighted_vertex_normals(const SurfaceMesh& mesh) {
  std::vector<Vec3> vn(mesh.vertices.size());
  for (const auto& t : mesh.triangles) {
    const Vec3 c = cross(mesh.vertices[t[1]] - mesh.vertices[t[0]], mesh.vertices[t[2]] - mesh.vertices[t[0]]);
    for (auto idx : t) vn[idx] += c;
  }
  for (auto& n : vn) {
    const double len = norm(n);
    if (len > 0.0) n = n / len;
  }
  return vn;
}

// Per-face shape operator fitted to the change of vertex normals along the
// three edges (least squares in the face frame); returns half its trace.
double face_mean_curvature(const std::array<Vec3, 3>& p, const std::array<Vec3, 3>& n, const Vec3& face_normal) {
  const Vec3 e1 = normalized(p[1] - p[0]);
  const Vec3 e2 = cross(face_normal, e1);
  // Normal equations for S = [[a, b], [b, c]] with rows (du, dv) -> (dnu, dnv).
  double m[3][3] = {};
  double rhs[3] = {};
  for (int k = 0; k < 3; ++k) {
    const Vec3 e = p[(k + 1) % 3] - p[k];
    const Vec3 dn = n[(k + 1) % 3] - n[k];
    const double u = dot(e, e1), v = dot(e, e2);
    const double dnu = dot(dn, e1), dnv = dot(dn, e2);
    // dnu = a u + b v ; dnv = b u + c v
    const double rows[2][3] = {{u, v, 0.0}, {0.0, u, v}};
    const double vals[2] = {dnu, dnv};
    for (int r = 0; r < 2; ++r) {
      for (int i = 0; i < 3; ++i) {
        rhs[i] += rows[r][i] * vals[r];
        for (int j = 0; j < 3; ++j) m[i][j] += rows[r][i] * rows[r][j];
      }
    }
  }
  // 3x3 solve by Cramer's rule.
  auto det3 = [](const double a[3][3]) {
    return a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
           a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
  };
  const double det = det3(m);
  if (std::abs(det) < 1e-300) return 0.0;
  double sol[3];
  for (int col = 0; col < 3; ++col) {
    double mc[3][3];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) mc[i][j] = (j == col) ? rhs[i] : m[i][j];
    sol[col] = det3(mc) / det;
  }
  return 0.5 * (sol[0] + sol[2]);
}

}  // namespace

PanelSet derive_panels(const SurfaceMesh& mesh) {
  mesh.validate();
  const auto box = bounding_box(mesh.vertices);
  const double scale2 = std::max(norm2(box.hi - box.lo), 1e-300);
  const double min_area = 1e-14 * scale2;

  const std::vector<Vec3> computed_normals =
      mesh.has_vertex_normals() ? std::vector<Vec3>{} : area_weighted_vertex_normals(mesh);
  const auto& vnormals = mesh.has_vertex_normals() ? mesh.vertex_normals : computed_normals;

  PanelSet ps;
  const auto nt = mesh.triangles.size();
  ps.centroid.resize(nt);
  ps.normal.resize(nt);
  ps.area.resize(nt);
  ps.mean_curvature.resize(nt);
  for (std::size_t t = 0; t < nt; ++t) {
    const auto& tri = mesh.triangles[t];
    const std::array<Vec3, 3> p{mesh.vertices[tri[0]], mesh.vertices[tri[1]], mesh.vertices[tri[2]]};
    const Vec3 c = cross(p[1] - p[0], p[2] - p[0]);
    const double len = norm(c);
    const double area = 0.5 * len;
    if (!(area > min_area)) {
      throw GeometryError("degenerate triangle " + std::to_string(t) + " (area " + std::to_string(area) + ")");
    }
    ps.centroid[t] = (p[0] + p[1] + p[2]) / 3.0;
    ps.normal[t] = c / len;
    ps.area[t] = area;
    const std::array<Vec3, 3> n{vnormals[tri[0]], vnormals[tri[1]], vnormals[tri[2]]};
    ps.mean_curvature[t] = face_mean_curvature(p, n, ps.normal[t]);
  }
  return ps;
}

MolecularSystem make_system(SurfaceMesh mesh, ChargeSet charges, DielectricModel dielectric) {
  dielectric.validate();
  MolecularSystem sys;
  sys.panels = derive_panels(mesh);
  sys.mesh = std::move(mesh);
  sys.charges = std::move(charges);
  sys.dielectric = dielectric;
  return sys;
}

SurfaceMesh icosphere(double radius, int subdivisions, Vec3 center) {
  if (subdivisions < 0 || subdivisions > 8) throw InputError("icosphere subdivisions must be in [0, 8]");
  if (!(radius > 0.0)) throw InputError("icosphere radius must be positive");

  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Vec3> v{{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                      {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (auto& p : v) p = normalized(p);
  std::vector<Triangle> f{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                          {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                          {3, 8, 9},  {4, 9, 5},  {2, 4, 11}, {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::uint32_t> midpoint;
    auto mid = [&](std::uint32_t a, std::uint32_t b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back(normalized(v[a] + v[b]));
      const auto idx = static_cast<std::uint32_t>(v.size() - 1);
      midpoint.emplace(key, idx);
      return idx;
    };
    std::vector<Triangle> next;
    next.reserve(f.size() * 4);
    for (const auto& tri : f) {
      const auto ab = mid(tri[0], tri[1]);
      const auto bc = mid(tri[1], tri[2]);
      const auto ca = mid(tri[2], tri[0]);
      next.push_back({tri[0], ab, ca});
      next.push_back({tri[1], bc, ab});
      next.push_back({tri[2], ca, bc});
      next.push_back({ab, bc, ca});
    }
    f = std::move(next);
  }

  SurfaceMesh mesh;
  mesh.vertex_normals = v;
  mesh.vertices.reserve(v.size());
  for (const auto& p : v) mesh.vertices.push_back(center + p * radius);
  mesh.triangles = std::move(f);
  return mesh;
}

SurfaceMesh uv_sphere(double radius, int segments, int bands, Vec3 center) {
  if (segments < 3 || bands < 2) throw InputError("uv_sphere needs at least 3 segments and 2 bands");
  if (!(radius > 0.0)) throw InputError("uv_sphere radius must be positive");
  std::vector<Vec3> v{{0, 0, 1}};
  for (int k = 1; k < bands; ++k) {
    const double theta = std::numbers::pi * k / bands;
    for (int j = 0; j < segments; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / segments;
      v.push_back({std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)});
    }
  }
  v.push_back({0, 0, -1});
  const auto south = static_cast<std::uint32_t>(v.size() - 1);
  auto ring = [&](int k, int j) { return static_cast<std::uint32_t>(1 + (k - 1) * segments + j % segments); };

  std::vector<Triangle> f;
  for (int j = 0; j < segments; ++j) f.push_back({0, ring(1, j), ring(1, j + 1)});
  for (int k = 1; k + 1 < bands; ++k) {
    for (int j = 0; j < segments; ++j) {
      f.push_back({ring(k, j), ring(k + 1, j), ring(k + 1, j + 1)});
      f.push_back({ring(k, j), ring(k + 1, j + 1), ring(k, j + 1)});
    }
  }
  for (int j = 0; j < segments; ++j) f.push_back({south, ring(bands - 1, j + 1), ring(bands - 1, j)});

  SurfaceMesh mesh;
  mesh.vertex_normals = v;
  for (const auto& p : v) mesh.vertices.push_back(center + p * radius);
  mesh.triangles = std::move(f);
  return mesh;
}

double signed_volume(const SurfaceMesh& mesh) {
  double vol = 0.0;
  for (const auto& t : mesh.triangles) {
    vol += dot(mesh.vertices[t[0]], cross(mesh.vertices[t[1]], mesh.vertices[t[2]]));
  }
  return vol / 6.0;
}

OrientationReport check_orientation(const SurfaceMesh& mesh) {
  OrientationReport r;
  r.signed_volume = signed_volume(mesh);
  r.outward = r.signed_volume > 0.0;
  return r;
}

void flip_orientation(SurfaceMesh& mesh) {
  for (auto& t : mesh.triangles) std::swap(t[1], t[2]);
  for (auto& n : mesh.vertex_normals) n = -n;
}

double winding_number(const SurfaceMesh& mesh, const Vec3& point) {
  // Van Oosterom-Strackee solid angle of each triangle.
  double total = 0.0;
  for (const auto& t : mesh.triangles) {
    const Vec3 a = mesh.vertices[t[0]] - point;
    const Vec3 b = mesh.vertices[t[1]] - point;
    const Vec3 c = mesh.vertices[t[2]] - point;
    const double la = norm(a), lb = norm(b), lc = norm(c);
    const double numer = dot(a, cross(b, c));
    const double denom = la * lb * lc + dot(a, b) * lc + dot(b, c) * la + dot(c, a) * lb;
    total += 2.0 * std::atan2(numer, denom);
  }
  return total / (4.0 * std::numbers::pi);
}

std::vector<std::size_t> charges_outside(const SurfaceMesh& mesh, std::span<const PointCharge> charges) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < charges.size(); ++i) {
    if (winding_number(mesh, charges[i].position) < 0.5) out.push_back(i);
  }
  return out;
}

}  // namespace fmmbem::geom
