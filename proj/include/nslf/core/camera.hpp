#pragma once

#include "nslf/core/vec.hpp"

namespace nslf {

/// Pinhole intrinsics. Pixel (u, v) has its center at integer coordinates.
struct CameraIntrinsics {
  double fx = 525.0;
  double fy = 525.0;
  double cx = 319.5;
  double cy = 239.5;
  int width = 640;
  int height = 480;
  double depth_scale = 1.0 / 5000.0;  // meters per stored depth unit

  /// Throws DomainError when the invariants do not hold.
  void validate() const;

  /// Same camera at a different resolution (principal point and focal scaled).
  CameraIntrinsics resized(int new_width, int new_height) const;
};

/// Rigid camera-to-world transform. Camera frame: x right, y down, z forward.
struct Pose {
  Mat3d rotation = Mat3d::identity();
  Vec3d translation{};

  Vec3d apply(const Vec3d& p_cam) const { return rotation * p_cam + translation; }
  Vec3d apply_inverse(const Vec3d& p_world) const {
    return rotation.transposed() * (p_world - translation);
  }
  Vec3d center() const { return translation; }

  /// Throws DomainError unless R^T R = I within tol and det R = +1.
  void validate(double tol = 1e-6) const;

  /// From a unit quaternion (qx, qy, qz, qw) and translation, TUM convention.
  static Pose from_quaternion(const Vec3d& t, double qx, double qy, double qz, double qw);
  /// Camera at `eye` looking at `target`, `up` roughly opposite to image y.
  static Pose look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up);

  /// Returns (qx, qy, qz, qw).
  void to_quaternion(double& qx, double& qy, double& qz, double& qw) const;
};

}  // namespace nslf
