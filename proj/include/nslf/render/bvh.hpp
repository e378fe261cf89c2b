#pragma once

#include <cstdint>
#include <limits>
#include <vector>

#include "nslf/core/mesh.hpp"

namespace nslf {

struct Aabb {
  Vec3f lo{std::numeric_limits<float>::max(), std::numeric_limits<float>::max(), std::numeric_limits<float>::max()};
  Vec3f hi{std::numeric_limits<float>::lowest(), std::numeric_limits<float>::lowest(),
           std::numeric_limits<float>::lowest()};

  void expand(const Vec3f& p) {
    lo = cwise_min(lo, p);
    hi = cwise_max(hi, p);
  }
  void expand(const Aabb& b) {
    lo = cwise_min(lo, b.lo);
    hi = cwise_max(hi, b.hi);
  }
  bool contains(const Aabb& b) const {
    return lo.x <= b.lo.x && lo.y <= b.lo.y && lo.z <= b.lo.z && hi.x >= b.hi.x && hi.y >= b.hi.y && hi.z >= b.hi.z;
  }
};

/// Nodes are stored depth-first; an interior node's children are `first` and `first + 1`.
struct BvhNode {
  Aabb box;
  std::uint32_t first = 0;  // leaf: offset into triangle order; interior: left child
  std::uint32_t count = 0;  // > 0 for leaves
  bool leaf() const { return count > 0; }
};

class Bvh {
 public:
  static constexpr std::uint32_t kMaxLeafSize = 4;

  /// Median split on the longest centroid axis. Throws DomainError on an empty mesh.
  static Bvh build(const TriangleMesh& mesh);

  const std::vector<BvhNode>& nodes() const { return nodes_; }
  const std::vector<std::uint32_t>& triangle_order() const { return order_; }
  std::size_t leaf_count() const;

  /// Every triangle in exactly one leaf, leaves no larger than kMaxLeafSize, triangles inside their
  /// leaf box, and child boxes inside parent boxes.
  bool audit(const TriangleMesh& mesh) const;

 private:
  std::vector<BvhNode> nodes_;
  std::vector<std::uint32_t> order_;
};

struct Ray {
  Vec3d origin;
  Vec3d dir;  // need not be unit; t is measured in multiples of dir
};

struct Hit {
  bool hit = false;
  double t = std::numeric_limits<double>::infinity();
  std::uint32_t triangle = 0;
  double u = 0, v = 0;  // barycentrics of vertices 1 and 2
};

/// Moller-Trumbore, culling nothing. Returns false for parallel rays and t <= t_min.
bool intersect_triangle(const Ray& ray, const Vec3d& v0, const Vec3d& v1, const Vec3d& v2, double& t, double& u,
                        double& v, double t_min = 1e-9);

/// Nearest hit; equal distances resolve to the smaller triangle index.
Hit intersect(const Bvh& bvh, const TriangleMesh& mesh, const Ray& ray);
/// Same contract by testing every triangle.
Hit intersect_brute_force(const TriangleMesh& mesh, const Ray& ray);

}  // namespace nslf
