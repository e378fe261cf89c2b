#include "nslf/render/bvh.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "nslf/core/errors.hpp"

namespace nslf {

namespace {

Aabb triangle_box(const TriangleMesh& m, std::uint32_t t) {
  Aabb b;
  for (auto i : m.triangles[t]) b.expand(m.vertices[i]);
  return b;
}

Vec3f centroid(const TriangleMesh& m, std::uint32_t t) {
  const auto& tri = m.triangles[t];
  return (m.vertices[tri[0]] + m.vertices[tri[1]] + m.vertices[tri[2]]) / 3.0f;
}

// Slab test against a box padded by a relative epsilon so that hits on the box surface are kept.
bool hit_box(const Aabb& b, const Vec3d& o, const Vec3d& inv, double t_max) {
  double t0 = 0.0, t1 = t_max;
  for (int a = 0; a < 3; ++a) {
    const double pad = 1e-7 * (1.0 + std::abs(static_cast<double>(b.lo[a])) + std::abs(static_cast<double>(b.hi[a])));
    const double lo = b.lo[a] - pad, hi = b.hi[a] + pad;
    if (std::isinf(inv[a])) {
      if (o[a] < lo || o[a] > hi) return false;
      continue;
    }
    double ta = (lo - o[a]) * inv[a];
    double tb = (hi - o[a]) * inv[a];
    if (ta > tb) std::swap(ta, tb);
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb * (1.0 + 1e-12));
    if (t0 > t1) return false;
  }
  return true;
}

bool closer(double t, std::uint32_t tri, const Hit& best) {
  return t < best.t || (t == best.t && tri < best.triangle);
}

void test_triangle(const TriangleMesh& mesh, std::uint32_t tri, const Ray& ray, Hit& best) {
  const auto& ix = mesh.triangles[tri];
  double t, u, v;
  if (!intersect_triangle(ray, Vec3d(mesh.vertices[ix[0]]), Vec3d(mesh.vertices[ix[1]]), Vec3d(mesh.vertices[ix[2]]),
                          t, u, v))
    return;
  if (!best.hit || closer(t, tri, best)) best = {true, t, tri, u, v};
}

}  // namespace

bool intersect_triangle(const Ray& ray, const Vec3d& v0, const Vec3d& v1, const Vec3d& v2, double& t, double& u,
                        double& v, double t_min) {
  const Vec3d e1 = v1 - v0;
  const Vec3d e2 = v2 - v0;
  const Vec3d p = cross(ray.dir, e2);
  const double det = dot(e1, p);
  if (det == 0.0 || !std::isfinite(det)) return false;
  const double inv = 1.0 / det;
  const Vec3d s = ray.origin - v0;
  u = dot(s, p) * inv;
  if (u < 0.0 || u > 1.0) return false;
  const Vec3d q = cross(s, e1);
  v = dot(ray.dir, q) * inv;
  if (v < 0.0 || u + v > 1.0) return false;
  t = dot(e2, q) * inv;
  return t > t_min;
}

Bvh Bvh::build(const TriangleMesh& mesh) {
  if (mesh.empty()) throw DomainError("bvh: mesh has no triangles");
  mesh.validate();
  Bvh bvh;
  const auto n = static_cast<std::uint32_t>(mesh.triangle_count());
  bvh.order_.resize(n);
  std::iota(bvh.order_.begin(), bvh.order_.end(), 0u);
  std::vector<Vec3f> cents(n);
  std::vector<Aabb> boxes(n);
  for (std::uint32_t t = 0; t < n; ++t) {
    cents[t] = centroid(mesh, t);
    boxes[t] = triangle_box(mesh, t);
  }
  bvh.nodes_.reserve(2 * (n / kMaxLeafSize + 1));

  struct Task {
    std::uint32_t node, begin, end;
  };
  bvh.nodes_.emplace_back();
  std::vector<Task> stack{{0, 0, n}};
  while (!stack.empty()) {
    const Task task = stack.back();
    stack.pop_back();
    Aabb box, cbox;
    for (std::uint32_t i = task.begin; i < task.end; ++i) {
      box.expand(boxes[bvh.order_[i]]);
      cbox.expand(cents[bvh.order_[i]]);
    }
    bvh.nodes_[task.node].box = box;
    const std::uint32_t count = task.end - task.begin;
    if (count <= kMaxLeafSize) {
      bvh.nodes_[task.node].first = task.begin;
      bvh.nodes_[task.node].count = count;
      continue;
    }
    const Vec3f ext = cbox.hi - cbox.lo;
    const int axis = ext.x >= ext.y && ext.x >= ext.z ? 0 : (ext.y >= ext.z ? 1 : 2);
    const std::uint32_t mid = task.begin + count / 2;
    std::nth_element(bvh.order_.begin() + task.begin, bvh.order_.begin() + mid, bvh.order_.begin() + task.end,
                     [&](std::uint32_t a, std::uint32_t b) {
                       if (cents[a][axis] != cents[b][axis]) return cents[a][axis] < cents[b][axis];
                       return a < b;
                     });
    const auto left = static_cast<std::uint32_t>(bvh.nodes_.size());
    bvh.nodes_.emplace_back();
    bvh.nodes_.emplace_back();
    bvh.nodes_[task.node].first = left;
    bvh.nodes_[task.node].count = 0;
    stack.push_back({left + 1, mid, task.end});
    stack.push_back({left, task.begin, mid});
  }
  return bvh;
}

std::size_t Bvh::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](const BvhNode& n) { return n.leaf(); }));
}

bool Bvh::audit(const TriangleMesh& mesh) const {
  if (nodes_.empty()) return false;
  std::vector<int> seen(mesh.triangle_count(), 0);
  std::vector<std::uint32_t> stack{0};
  while (!stack.empty()) {
    const BvhNode& node = nodes_[stack.back()];
    stack.pop_back();
    if (node.leaf()) {
      if (node.count > kMaxLeafSize || node.first + node.count > order_.size()) return false;
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) {
        const std::uint32_t t = order_[i];
        if (t >= seen.size()) return false;
        ++seen[t];
        if (!node.box.contains(triangle_box(mesh, t))) return false;
      }
      continue;
    }
    if (node.first + 1 >= nodes_.size()) return false;
    for (std::uint32_t c : {node.first, node.first + 1}) {
      if (!node.box.contains(nodes_[c].box)) return false;
      stack.push_back(c);
    }
  }
  return std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; });
}

Hit intersect(const Bvh& bvh, const TriangleMesh& mesh, const Ray& ray) {
  Hit best;
  const Vec3d inv{1.0 / ray.dir.x, 1.0 / ray.dir.y, 1.0 / ray.dir.z};
  std::uint32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  const auto& nodes = bvh.nodes();
  const auto& order = bvh.triangle_order();
  while (top > 0) {
    const BvhNode& node = nodes[stack[--top]];
    if (!hit_box(node.box, ray.origin, inv, best.t)) continue;
    if (node.leaf()) {
      for (std::uint32_t i = node.first; i < node.first + node.count; ++i) test_triangle(mesh, order[i], ray, best);
      continue;
    }
    stack[top++] = node.first + 1;
    stack[top++] = node.first;
  }
  return best;
}

Hit intersect_brute_force(const TriangleMesh& mesh, const Ray& ray) {
  Hit best;
  for (std::uint32_t t = 0; t < mesh.triangle_count(); ++t) test_triangle(mesh, t, ray, best);
  return best;
}

}  // namespace nslf
