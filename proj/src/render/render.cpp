#include "nslf/render/render.hpp"

#include <algorithm>

namespace nslf {

namespace {

RaycastResult make_result(const CameraIntrinsics& K) {
  RaycastResult r;
  r.width = K.width;
  r.height = K.height;
  const std::size_t n = static_cast<std::size_t>(K.width) * K.height;
  r.points.assign(n, Vec3d{});
  r.depth.assign(n, 0.0);
  r.triangle.assign(n, 0);
  r.mask.assign(n, 0);
  return r;
}

void cast_row(const Bvh& bvh, const TriangleMesh& mesh, const CameraIntrinsics& K, const Pose& T, int v,
              RaycastResult& r) {
  for (int u = 0; u < K.width; ++u) {
    const Ray ray = camera_ray(K, T, u, v);
    const Hit h = intersect(bvh, mesh, ray);
    if (!h.hit) continue;
    const std::size_t i = static_cast<std::size_t>(v) * K.width + u;
    r.points[i] = ray.origin + ray.dir * h.t;
    r.depth[i] = h.t;
    r.triangle[i] = h.triangle;
    r.mask[i] = 1;
  }
}

}  // namespace

std::size_t RaycastResult::hit_count() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

Ray camera_ray(const CameraIntrinsics& K, const Pose& T, int u, int v) {
  const Vec3d d_cam{(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0};
  return {T.center(), T.rotation * d_cam};
}

RaycastResult raycast(const Bvh& bvh, const TriangleMesh& mesh, const CameraIntrinsics& K, const Pose& T) {
  K.validate();
  RaycastResult r = make_result(K);
#pragma omp parallel for schedule(dynamic, 4)
  for (int v = 0; v < K.height; ++v) cast_row(bvh, mesh, K, T, v, r);
  return r;
}

RaycastResult raycast_serial(const Bvh& bvh, const TriangleMesh& mesh, const CameraIntrinsics& K, const Pose& T) {
  K.validate();
  RaycastResult r = make_result(K);
  for (int v = 0; v < K.height; ++v) cast_row(bvh, mesh, K, T, v, r);
  return r;
}

RenderResult render_from_raycast(const Snapshot& snapshot, const RaycastResult& rays, const Pose& T) {
  RenderResult out;
  out.image = Image(rays.width, rays.height, kBackgroundColor);
  out.image.enable_mask(false);
  std::vector<std::size_t> pixels;
  std::vector<Vec3d> points;
  std::vector<Vec3f> dirs;
  const Vec3d c = T.center();
  for (std::size_t i = 0; i < rays.mask.size(); ++i) {
    if (!rays.mask[i]) continue;
    pixels.push_back(i);
    points.push_back(rays.points[i]);
    dirs.push_back(Vec3f(normalized(rays.points[i] - c)));
  }
  out.hits = pixels.size();
  PredictOptions opt;
  opt.outside_as_uncovered = true;
  const Prediction pred = predict_batch(snapshot, points, dirs, opt);
  for (std::size_t k = 0; k < pixels.size(); ++k) {
    const std::size_t i = pixels[k];
    const Vec3f col = pred.colors[k];
    out.image.rgb[3 * i] = col.x;
    out.image.rgb[3 * i + 1] = col.y;
    out.image.rgb[3 * i + 2] = col.z;
    out.image.mask[i] = pred.covered[k];
  }
  out.uncovered = pred.uncovered;
  out.image.clamp01();
  return out;
}

RenderResult render_view(const Snapshot& snapshot, const TriangleMesh& mesh, const Bvh& bvh,
                         const CameraIntrinsics& K, const Pose& T) {
  return render_from_raycast(snapshot, raycast(bvh, mesh, K, T), T);
}

}  // namespace nslf
