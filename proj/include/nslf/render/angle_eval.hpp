#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "nslf/core/camera.hpp"
#include "nslf/core/image.hpp"
#include "nslf/ingest/unproject.hpp"
#include "nslf/mana/snapshot.hpp"
#include "nslf/render/bvh.hpp"
#include "nslf/render/render.hpp"

namespace nslf {

/// View directions observed during training, indexed by surface position, plus the optical axes
/// of the training cameras.
class TrainedDirections {
 public:
  explicit TrainedDirections(double match_radius = 0.01);

  void add(const ColoredPointBatch& batch);
  void add_camera(const Pose& pose);

  double match_radius() const { return radius_; }
  std::size_t size() const { return points_.size(); }
  std::size_t camera_count() const { return axes_.size(); }

  /// Smallest angle (degrees) between d and any trained direction recorded within match_radius of
  /// p; nullopt when no trained sample is that close.
  std::optional<double> nearest_angle_deg(const Vec3d& p, const Vec3f& d) const;
  /// Smallest angle (degrees) between the optical axis of `pose` and any training camera axis.
  std::optional<double> nearest_camera_angle_deg(const Pose& pose) const;

 private:
  struct Key {
    std::int64_t x, y, z;
    bool operator==(const Key&) const = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const;
  };
  Key key_of(const Vec3d& p) const;

  double radius_;
  std::vector<Vec3d> points_;
  std::vector<Vec3f> dirs_;
  std::unordered_map<Key, std::vector<std::uint32_t>, KeyHash> cells_;
  std::vector<Vec3d> axes_;
};

struct AngleEvalFrame {
  Image ground_truth;  // mask marks valid ground-truth pixels
  CameraIntrinsics intrinsics;
  Pose pose;
};

struct AngleEvalOptions {
  std::vector<double> thresholds_deg{15.0, 30.0, 60.0};
  /// Use the angle between camera optical axes for every pixel of a frame.
  bool per_frame_camera_angle = false;
};

struct AngleBucket {
  double threshold_deg = 0.0;
  std::size_t pixels = 0;
  double squared_error = 0.0;  // summed over pixels and channels
  std::optional<double> psnr;  // absent for an empty bucket
};

struct AngleEvalResult {
  std::vector<AngleBucket> buckets;
  std::size_t evaluated_pixels = 0;  // pixels valid in render and ground truth
  std::size_t unmatched_pixels = 0;  // no trained direction near the surface point
};

/// Adds one rendered frame to `acc`; buckets are created from `options` on first use.
void accumulate_angle_eval(AngleEvalResult& acc, const RaycastResult& rays, const Image& rendered,
                           const Image& ground_truth, const Pose& pose, const TrainedDirections& trained,
                           const AngleEvalOptions& options = {});

/// Renders every frame, measures each pixel's angle to the nearest trained direction at its surface
/// point and reports PSNR over the pixels at or below each threshold (buckets are nested).
AngleEvalResult angle_filtered_eval(const Snapshot& snapshot, const TriangleMesh& mesh, const Bvh& bvh,
                                    std::span<const AngleEvalFrame> frames, const TrainedDirections& trained,
                                    const AngleEvalOptions& options = {});

}  // namespace nslf
