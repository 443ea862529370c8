#include "fmmbem/geom/io.hpp"

#include <cctype>
#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fmmbem/errors.hpp"

namespace fmmbem::geom {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

template <typename T>
bool parse_number(std::string_view s, T& value) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc{} && ptr == last;
}

[[noreturn]] void fail(std::string_view what, std::size_t line_no, const std::string& msg) {
  throw InputError(std::string(what) + ":" + std::to_string(line_no) + ": " + msg);
}

std::ifstream open_in(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw InputError("cannot open " + p.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p);
  if (!out) throw InputError("cannot write " + p.string());
  return out;
}

constexpr int kHeaderLines = 3;

}  // namespace

SurfaceMesh read_msms(std::istream& vert, std::istream& face) {
  SurfaceMesh mesh;
  std::string line;
  std::size_t line_no = 0;
  bool normals_complete = true;

  while (std::getline(vert, line)) {
    ++line_no;
    if (line_no <= kHeaderLines) continue;
    const auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() < 3) fail("vert", line_no, "expected at least 3 coordinates");
    Vec3 p;
    for (int d = 0; d < 3; ++d) {
      if (!parse_number(f[d], p[d])) fail("vert", line_no, "non-numeric coordinate '" + std::string(f[d]) + "'");
    }
    mesh.vertices.push_back(p);
    if (f.size() >= 6) {
      Vec3 n;
      for (int d = 0; d < 3; ++d) {
        if (!parse_number(f[3 + d], n[d])) fail("vert", line_no, "non-numeric normal '" + std::string(f[3 + d]) + "'");
      }
      mesh.vertex_normals.push_back(n);
    } else {
      normals_complete = false;
    }
  }
  if (line_no < kHeaderLines) fail("vert", line_no, "missing header lines");
  if (!normals_complete || mesh.vertex_normals.size() != mesh.vertices.size()) {
    mesh.vertex_normals.clear();
  } else {
    for (auto& n : mesh.vertex_normals) {
      const double len = norm(n);
      if (len > 0.0) n = n / len;
    }
  }

  line_no = 0;
  const auto nv = mesh.vertices.size();
  while (std::getline(face, line)) {
    ++line_no;
    if (line_no <= kHeaderLines) continue;
    const auto f = split_ws(line);
    if (f.empty()) continue;
    if (f.size() < 3) fail("face", line_no, "expected 3 vertex indices");
    Triangle t;
    for (int k = 0; k < 3; ++k) {
      long long idx = 0;
      if (!parse_number(f[k], idx)) fail("face", line_no, "non-numeric index '" + std::string(f[k]) + "'");
      if (idx < 1 || static_cast<std::size_t>(idx) > nv) {
        fail("face", line_no, "index " + std::to_string(idx) + " out of range 1.." + std::to_string(nv));
      }
      t[k] = static_cast<std::uint32_t>(idx - 1);
    }
    mesh.triangles.push_back(t);
  }
  if (line_no < kHeaderLines) fail("face", line_no, "missing header lines");
  return mesh;
}

SurfaceMesh load_msms(const std::filesystem::path& vert_path, const std::filesystem::path& face_path) {
  auto vert = open_in(vert_path);
  auto face = open_in(face_path);
  try {
    return read_msms(vert, face);
  } catch (const InputError& e) {
    throw InputError(vert_path.string() + " / " + face_path.string() + ": " + e.what());
  }
}

void write_msms(const SurfaceMesh& mesh, std::ostream& vert, std::ostream& face) {
  std::vector<Vec3> normals = mesh.vertex_normals;
  if (normals.empty()) {
    normals.assign(mesh.vertices.size(), Vec3{});
    for (const auto& t : mesh.triangles) {
      const Vec3 c = cross(mesh.vertices[t[1]] - mesh.vertices[t[0]], mesh.vertices[t[2]] - mesh.vertices[t[0]]);
      for (auto idx : t) normals[idx] += c;
    }
    for (auto& n : normals) {
      const double len = norm(n);
      if (len > 0.0) n = n / len;
    }
  }

  char buf[256];
  vert << "# MSMS solvent excluded surface vertices\n";
  vert << "#vertex #sphere density probe_r\n";
  vert << mesh.vertices.size() << " 0 0.0 0.0\n";
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const auto& p = mesh.vertices[i];
    const auto& n = normals[i];
    std::snprintf(buf, sizeof buf, "%16.10f %16.10f %16.10f %13.10f %13.10f %13.10f 0 %zu 2\n", p.x, p.y, p.z, n.x,
                  n.y, n.z, i + 1);
    vert << buf;
  }

  face << "# MSMS solvent excluded surface faces\n";
  face << "#faces #sphere density probe_r\n";
  face << mesh.triangles.size() << " 0 0.0 0.0\n";
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof buf, "%8u %8u %8u 1 1\n", t[0] + 1, t[1] + 1, t[2] + 1);
    face << buf;
  }
}

void write_msms(const SurfaceMesh& mesh, const std::filesystem::path& vert_path,
                const std::filesystem::path& face_path) {
  auto vert = open_out(vert_path);
  auto face = open_out(face_path);
  write_msms(mesh, vert, face);
  if (!vert || !face) throw InputError("write failed for " + vert_path.string());
}

ChargeSet read_pqr(std::istream& in) {
  ChargeSet charges;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto f = split_ws(line);
    if (f.empty() || (f[0] != "ATOM" && f[0] != "HETATM")) continue;
    if (f.size() < 9) fail("pqr", line_no, "ATOM record has " + std::to_string(f.size()) + " fields, need at least 9");
    const std::size_t n = f.size();
    PointCharge c;
    for (int d = 0; d < 3; ++d) {
      if (!parse_number(f[n - 5 + d], c.position[d])) {
        fail("pqr", line_no, "non-numeric coordinate '" + std::string(f[n - 5 + d]) + "'");
      }
    }
    if (!parse_number(f[n - 2], c.charge)) fail("pqr", line_no, "non-numeric charge '" + std::string(f[n - 2]) + "'");
    if (!parse_number(f[n - 1], c.radius)) fail("pqr", line_no, "non-numeric radius '" + std::string(f[n - 1]) + "'");
    charges.push_back(c);
  }
  return charges;
}

ChargeSet load_pqr(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return read_pqr(in);
  } catch (const InputError& e) {
    throw InputError(path.string() + ": " + e.what());
  }
}

void write_pqr(const ChargeSet& charges, std::ostream& out) {
  char buf[256];
  for (std::size_t i = 0; i < charges.size(); ++i) {
    const auto& c = charges[i];
    std::snprintf(buf, sizeof buf, "ATOM %6zu  X   ION %5zu %16.10f %16.10f %16.10f %12.8f %8.4f\n", i + 1, i + 1,
                  c.position.x, c.position.y, c.position.z, c.charge, c.radius);
    out << buf;
  }
  out << "END\n";
}

void write_pqr(const ChargeSet& charges, const std::filesystem::path& path) {
  auto out = open_out(path);
  write_pqr(charges, out);
  if (!out) throw InputError("write failed for " + path.string());
}

}  // namespace fmmbem::geom
