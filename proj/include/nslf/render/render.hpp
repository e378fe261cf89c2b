#pragma once

#include <cstdint>
#include <vector>

#include "nslf/core/camera.hpp"
#include "nslf/core/image.hpp"
#include "nslf/mana/snapshot.hpp"
#include "nslf/render/bvh.hpp"

namespace nslf {

/// Per-pixel nearest surface hit of the camera rays.
struct RaycastResult {
  int width = 0, height = 0;
  std::vector<Vec3d> points;          // world hit points
  std::vector<double> depth;          // camera z (meters); 0 on miss
  std::vector<std::uint32_t> triangle;
  std::vector<std::uint8_t> mask;     // 1 = hit

  std::size_t hit_count() const;
};

/// Ray through the center of pixel (u, v); dir has unit camera-frame z, so t equals depth.
Ray camera_ray(const CameraIntrinsics& K, const Pose& T, int u, int v);

/// Parallel over image rows.
RaycastResult raycast(const Bvh& bvh, const TriangleMesh& mesh, const CameraIntrinsics& K, const Pose& T);
/// Single-threaded reference with identical results.
RaycastResult raycast_serial(const Bvh& bvh, const TriangleMesh& mesh, const CameraIntrinsics& K, const Pose& T);

inline const Vec3f kBackgroundColor{0.f, 0.f, 0.f};

struct RenderResult {
  /// Mask: 1 where a trained agent produced the color. Misses are black, hits in regions without
  /// an agent (or outside the box) are mid-gray; both are masked off.
  Image image;
  std::size_t hits = 0;
  std::size_t uncovered = 0;
};

/// Assembles an image from a ray cast. Directions are normalize(p - camera center).
RenderResult render_from_raycast(const Snapshot& snapshot, const RaycastResult& rays, const Pose& T);
RenderResult render_view(const Snapshot& snapshot, const TriangleMesh& mesh, const Bvh& bvh,
                         const CameraIntrinsics& K, const Pose& T);

}  // namespace nslf
