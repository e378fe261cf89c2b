#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "nslf/core/vec.hpp"

namespace nslf {

/// Indexed triangle mesh in world coordinates (meters).
struct TriangleMesh {
  std::vector<Vec3f> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;

  std::size_t triangle_count() const { return triangles.size(); }
  bool empty() const { return triangles.empty(); }
  double triangle_area(std::size_t t) const;
  /// Throws ShapeError when an index is out of range.
  void validate() const;
};

/// Lat-long tessellation: 2 * rings * segments - 2 * segments triangles.
TriangleMesh make_sphere_mesh(const Vec3d& center, double radius, int rings, int segments);
/// Square of side 2 * half_size centered at `center`, split into 2 * n * n triangles.
TriangleMesh make_plane_mesh(const Vec3d& center, const Vec3d& normal, double half_size, int n = 1);

}  // namespace nslf
