#include "nslf/ingest/unproject.hpp"

#include <cmath>

#include "nslf/core/errors.hpp"

namespace nslf {

void ColoredPointBatch::append(const ColoredPointBatch& other) {
  points.insert(points.end(), other.points.begin(), other.points.end());
  directions.insert(directions.end(), other.directions.begin(), other.directions.end());
  colors.insert(colors.end(), other.colors.begin(), other.colors.end());
}

void ColoredPointBatch::validate() const {
  if (directions.size() != points.size() || colors.size() != points.size())
    throw ShapeError("point batch: points, directions and colors differ in length");
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.z))
      throw DomainError("point batch: non-finite point at index " + std::to_string(i));
    const double n = norm(Vec3d(directions[i]));
    if (!(std::abs(n - 1.0) <= 1e-6)) throw DomainError("point batch: non-unit direction at index " + std::to_string(i));
  }
}

double depth_meters(float stored, const CameraIntrinsics& K) {
  const double d = static_cast<double>(stored) * K.depth_scale;
  if (!std::isfinite(d) || d <= 0.0 || d >= kMaxValidDepth) return 0.0;
  return d;
}

ColoredPointBatch unproject_frame(const DepthImage& depth, const Image& color, const CameraIntrinsics& K,
                                  const Pose& T, int stride) {
  K.validate();
  if (stride < 1) throw DomainError("unproject: stride must be >= 1");
  if (depth.width != K.width || depth.height != K.height || color.width != K.width || color.height != K.height)
    throw ShapeError("unproject: image dimensions do not match intrinsics");
  ColoredPointBatch out;
  out.reserve(static_cast<std::size_t>((K.width + stride - 1) / stride) * ((K.height + stride - 1) / stride));
  const Vec3d center = T.center();
  for (int v = 0; v < K.height; v += stride)
    for (int u = 0; u < K.width; u += stride) {
      const double z = depth_meters(depth.at(u, v), K);
      if (z == 0.0 || !color.valid(color.index(u, v))) continue;
      const Vec3d p_cam{z * (u - K.cx) / K.fx, z * (v - K.cy) / K.fy, z};
      const Vec3d p = T.apply(p_cam);
      const Vec3d d = normalized(p - center);
      const Vec3f c = color.at(u, v);
      out.push_back(p, Vec3f(d), c);
    }
  return out;
}

Projection project_point(const Vec3d& p_world, const CameraIntrinsics& K, const Pose& T) {
  const Vec3d q = T.apply_inverse(p_world);
  return {K.fx * q.x / q.z + K.cx, K.fy * q.y / q.z + K.cy, q.z};
}

}  // namespace nslf
