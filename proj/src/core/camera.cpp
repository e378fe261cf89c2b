#include "nslf/core/camera.hpp"

#include <cmath>
#include <string>

#include "nslf/core/errors.hpp"

namespace nslf {

void CameraIntrinsics::validate() const {
  if (!(fx > 0 && fy > 0)) throw DomainError("intrinsics: focal lengths must be positive");
  if (width <= 0 || height <= 0) throw DomainError("intrinsics: image size must be positive");
  if (!(cx > 0 && cx < width && cy > 0 && cy < height))
    throw DomainError("intrinsics: principal point outside the image");
  if (!(depth_scale > 0)) throw DomainError("intrinsics: depth_scale must be positive");
}

CameraIntrinsics CameraIntrinsics::resized(int new_width, int new_height) const {
  CameraIntrinsics k = *this;
  const double sx = static_cast<double>(new_width) / width;
  const double sy = static_cast<double>(new_height) / height;
  k.fx = fx * sx;
  k.fy = fy * sy;
  // pixel centers sit at integer coordinates
  k.cx = (cx + 0.5) * sx - 0.5;
  k.cy = (cy + 0.5) * sy - 0.5;
  k.width = new_width;
  k.height = new_height;
  return k;
}

void Pose::validate(double tol) const {
  const Mat3d rtr = rotation.transposed() * rotation;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      const double expect = i == j ? 1.0 : 0.0;
      if (std::abs(rtr.m[i][j] - expect) > tol)
        throw DomainError("pose: rotation is not orthonormal");
    }
  if (rotation.determinant() < 0) throw DomainError("pose: rotation has det -1");
  if (!std::isfinite(translation.x) || !std::isfinite(translation.y) ||
      !std::isfinite(translation.z))
    throw DomainError("pose: non-finite translation");
}

Pose Pose::from_quaternion(const Vec3d& t, double qx, double qy, double qz, double qw) {
  const double n = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
  if (!(n > 0)) throw DomainError("pose: zero quaternion");
  qx /= n;
  qy /= n;
  qz /= n;
  qw /= n;
  Pose p;
  auto& m = p.rotation.m;
  m[0][0] = 1 - 2 * (qy * qy + qz * qz);
  m[0][1] = 2 * (qx * qy - qz * qw);
  m[0][2] = 2 * (qx * qz + qy * qw);
  m[1][0] = 2 * (qx * qy + qz * qw);
  m[1][1] = 1 - 2 * (qx * qx + qz * qz);
  m[1][2] = 2 * (qy * qz - qx * qw);
  m[2][0] = 2 * (qx * qz - qy * qw);
  m[2][1] = 2 * (qy * qz + qx * qw);
  m[2][2] = 1 - 2 * (qx * qx + qy * qy);
  p.translation = t;
  return p;
}

Pose Pose::look_at(const Vec3d& eye, const Vec3d& target, const Vec3d& up) {
  const Vec3d z = normalized(target - eye);
  Vec3d x = cross(z, up);
  if (norm(x) < 1e-12) throw DomainError("pose: look_at up vector parallel to view direction");
  x = normalized(x);
  // image y points down, so world `up` maps to -y
  const Vec3d y = cross(z, x);
  Pose p;
  p.rotation.set_column(0, x);
  p.rotation.set_column(1, y);
  p.rotation.set_column(2, z);
  p.translation = eye;
  return p;
}

void Pose::to_quaternion(double& qx, double& qy, double& qz, double& qw) const {
  const auto& m = rotation.m;
  const double tr = m[0][0] + m[1][1] + m[2][2];
  if (tr > 0) {
    const double s = std::sqrt(tr + 1.0) * 2;
    qw = 0.25 * s;
    qx = (m[2][1] - m[1][2]) / s;
    qy = (m[0][2] - m[2][0]) / s;
    qz = (m[1][0] - m[0][1]) / s;
  } else if (m[0][0] > m[1][1] && m[0][0] > m[2][2]) {
    const double s = std::sqrt(1.0 + m[0][0] - m[1][1] - m[2][2]) * 2;
    qw = (m[2][1] - m[1][2]) / s;
    qx = 0.25 * s;
    qy = (m[0][1] + m[1][0]) / s;
    qz = (m[0][2] + m[2][0]) / s;
  } else if (m[1][1] > m[2][2]) {
    const double s = std::sqrt(1.0 + m[1][1] - m[0][0] - m[2][2]) * 2;
    qw = (m[0][2] - m[2][0]) / s;
    qx = (m[0][1] + m[1][0]) / s;
    qy = 0.25 * s;
    qz = (m[1][2] + m[2][1]) / s;
  } else {
    const double s = std::sqrt(1.0 + m[2][2] - m[0][0] - m[1][1]) * 2;
    qw = (m[1][0] - m[0][1]) / s;
    qx = (m[0][2] + m[2][0]) / s;
    qy = (m[1][2] + m[2][1]) / s;
    qz = 0.25 * s;
  }
}

}  // namespace nslf
