#include "nslf/core/mesh.hpp"

#include <cmath>
#include <numbers>

#include "nslf/core/errors.hpp"

namespace nslf {

double TriangleMesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Vec3d a(vertices[tri[0]]), b(vertices[tri[1]]), c(vertices[tri[2]]);
  return 0.5 * norm(cross(b - a, c - a));
}

void TriangleMesh::validate() const {
  for (const auto& tri : triangles)
    for (auto i : tri)
      if (i >= vertices.size()) throw ShapeError("mesh: triangle index out of range");
}

TriangleMesh make_sphere_mesh(const Vec3d& center, double radius, int rings, int segments) {
  if (rings < 2 || segments < 3) throw DomainError("sphere mesh: need rings >= 2 and segments >= 3");
  TriangleMesh m;
  const double pi = std::numbers::pi;
  m.vertices.push_back(Vec3f(center + Vec3d{0, 0, radius}));
  for (int r = 1; r < rings; ++r) {
    const double theta = pi * r / rings;
    for (int s = 0; s < segments; ++s) {
      const double phi = 2 * pi * s / segments;
      const Vec3d dir{std::sin(theta) * std::cos(phi), std::sin(theta) * std::sin(phi), std::cos(theta)};
      m.vertices.push_back(Vec3f(center + dir * radius));
    }
  }
  m.vertices.push_back(Vec3f(center + Vec3d{0, 0, -radius}));
  const auto ring_vertex = [&](int r, int s) {
    return static_cast<std::uint32_t>(1 + (r - 1) * segments + (s % segments));
  };
  const auto south = static_cast<std::uint32_t>(m.vertices.size() - 1);
  // outward-facing (counter-clockwise seen from outside)
  for (int s = 0; s < segments; ++s) m.triangles.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
  for (int r = 1; r + 1 < rings; ++r)
    for (int s = 0; s < segments; ++s) {
      const auto a = ring_vertex(r, s), b = ring_vertex(r, s + 1);
      const auto c = ring_vertex(r + 1, s), d = ring_vertex(r + 1, s + 1);
      m.triangles.push_back({a, c, d});
      m.triangles.push_back({a, d, b});
    }
  for (int s = 0; s < segments; ++s)
    m.triangles.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
  return m;
}

TriangleMesh make_plane_mesh(const Vec3d& center, const Vec3d& normal, double half_size, int n) {
  if (n < 1) throw DomainError("plane mesh: need n >= 1");
  const Vec3d nz = normalized(normal);
  const Vec3d helper = std::abs(nz.x) < 0.9 ? Vec3d{1, 0, 0} : Vec3d{0, 1, 0};
  const Vec3d u = normalized(cross(helper, nz));
  const Vec3d v = cross(nz, u);
  TriangleMesh m;
  for (int j = 0; j <= n; ++j)
    for (int i = 0; i <= n; ++i) {
      const double a = -half_size + 2 * half_size * i / n;
      const double b = -half_size + 2 * half_size * j / n;
      m.vertices.push_back(Vec3f(center + u * a + v * b));
    }
  const auto idx = [&](int i, int j) { return static_cast<std::uint32_t>(j * (n + 1) + i); };
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      m.triangles.push_back({idx(i, j), idx(i + 1, j), idx(i + 1, j + 1)});
      m.triangles.push_back({idx(i, j), idx(i + 1, j + 1), idx(i, j + 1)});
    }
  return m;
}

}  // namespace nslf
