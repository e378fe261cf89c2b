#pragma once

#include <vector>

#include "nslf/core/camera.hpp"
#include "nslf/core/image.hpp"

namespace nslf {

/// Colored, directed world-space points of one frame. Directions point from the camera center
/// toward the surface point.
struct ColoredPointBatch {
  std::vector<Vec3d> points;
  std::vector<Vec3f> directions;
  std::vector<Vec3f> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  void reserve(std::size_t n) {
    points.reserve(n);
    directions.reserve(n);
    colors.reserve(n);
  }
  void push_back(const Vec3d& p, const Vec3f& d, const Vec3f& c) {
    points.push_back(p);
    directions.push_back(d);
    colors.push_back(c);
  }
  void append(const ColoredPointBatch& other);
  /// Throws ShapeError on length mismatch, DomainError on non-finite or non-unit entries.
  void validate() const;
};

inline constexpr double kMaxValidDepth = 65.0;  // meters

/// Depth in meters; 0 when invalid (<= 0, >= kMaxValidDepth, or non-finite).
double depth_meters(float stored, const CameraIntrinsics& K);

/// Back-projects every `stride`-th pixel with valid depth. Pixels masked off in `color` are skipped.
ColoredPointBatch unproject_frame(const DepthImage& depth, const Image& color, const CameraIntrinsics& K,
                                  const Pose& T, int stride = 2);

/// Pixel coordinates and camera depth of a world point (inverse of unprojection).
struct Projection {
  double u = 0, v = 0, depth = 0;
};
Projection project_point(const Vec3d& p_world, const CameraIntrinsics& K, const Pose& T);

}  // namespace nslf
