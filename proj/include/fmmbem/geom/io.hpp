#pragma once

#include <filesystem>
#include <iosfwd>

#include "fmmbem/geom/mesh.hpp"

namespace fmmbem::geom {

/// Reads an MSMS .vert/.face pair. Both files carry three header lines; vertex
/// rows are `x y z nx ny nz ...`, face rows `i1 i2 i3 ...` with 1-based indices.
/// Errors are InputError with the offending file and line number.
SurfaceMesh load_msms(const std::filesystem::path& vert_path, const std::filesystem::path& face_path);

SurfaceMesh read_msms(std::istream& vert, std::istream& face);

/// Writes the MSMS layout read by load_msms. Vertex normals are written when
/// present, otherwise area-weighted normals are computed.
void write_msms(const SurfaceMesh& mesh, const std::filesystem::path& vert_path,
                const std::filesystem::path& face_path);

void write_msms(const SurfaceMesh& mesh, std::ostream& vert, std::ostream& face);

/// Whitespace-delimited PQR: ATOM/HETATM records only; coordinates are the
/// three fields before the trailing charge and radius.
ChargeSet load_pqr(const std::filesystem::path& path);

ChargeSet read_pqr(std::istream& in);

void write_pqr(const ChargeSet& charges, const std::filesystem::path& path);

void write_pqr(const ChargeSet& charges, std::ostream& out);

}  // namespace fmmbem::geom
