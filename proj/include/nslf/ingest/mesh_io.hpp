#pragma once

#include <cstddef>
#include <filesystem>

#include "nslf/core/mesh.hpp"

namespace nslf {

struct MeshLoadReport {
  std::size_t polygons_triangulated = 0;
  std::size_t degenerate_dropped = 0;
};

/// Loads OBJ (`v` and `f`; polygons fan-triangulated; vt/vn/g/o/s/usemtl/mtllib ignored) or binary
/// little-endian PLY (vertex x/y/z plus a face list). Zero-area triangles are dropped with a warning.
/// Other OBJ statements or PLY layouts raise DataError.
TriangleMesh load_mesh(const std::filesystem::path& path, MeshLoadReport* report = nullptr);
TriangleMesh load_obj(const std::filesystem::path& path, MeshLoadReport* report = nullptr);
TriangleMesh load_ply(const std::filesystem::path& path, MeshLoadReport* report = nullptr);

void write_obj(const std::filesystem::path& path, const TriangleMesh& mesh);
void write_ply(const std::filesystem::path& path, const TriangleMesh& mesh);

}  // namespace nslf
