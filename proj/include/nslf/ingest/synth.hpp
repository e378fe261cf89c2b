#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "nslf/core/camera.hpp"
#include "nslf/core/image.hpp"
#include "nslf/core/mesh.hpp"

namespace nslf {

enum class SynthSurface { Plane, Sphere };

/// Analytic scene: one primitive, a procedural albedo field, Lambertian + Phong shading under a
/// directional light.
struct SynthScene {
  SynthSurface surface = SynthSurface::Sphere;
  Vec3d center{0, 0, 0};
  double radius = 1.0;      // sphere
  Vec3d normal{0, 0, 1};    // plane
  double half_size = 1.0;   // plane, half side length

  std::uint64_t texture_seed = 1;
  double texture_frequency = 4.0;  // radians per meter
  double texture_amplitude = 0.25;
  Vec3d base_albedo{0.55, 0.5, 0.45};

  Vec3d light_dir{0.3, -0.5, -0.8};  // direction toward the light
  double ambient = 0.35;
  double diffuse = 0.55;
  double specular_strength = 0.0;
  double specular_exponent = 16.0;

  void validate() const;

  static SynthScene textured_plane(const Vec3d& center, const Vec3d& normal, double half_size);
  static SynthScene shiny_sphere(const Vec3d& center, double radius, double specular_strength);
};

/// Ground-truth light field of a SynthScene. Pure and deterministic.
class SynthOracle {
 public:
  explicit SynthOracle(const SynthScene& scene);

  const SynthScene& scene() const { return scene_; }

  /// Outward surface normal at a surface point.
  Vec3d surface_normal(const Vec3d& p) const;
  Vec3d albedo(const Vec3d& p) const;
  /// Outgoing color at surface point p seen along unit direction d (camera center -> point),
  /// clamped to [0,1]. The normal is taken on the side facing the viewer.
  Vec3d color(const Vec3d& p, const Vec3d& d) const;
  /// Nearest positive ray parameter, if any.
  std::optional<double> intersect(const Vec3d& origin, const Vec3d& dir) const;
  /// Tessellated surface: sphere uses `resolution` rings and 2*resolution segments.
  TriangleMesh mesh(int resolution = 64) const;

 private:
  SynthScene scene_;
  Vec3d light_;
  Vec3d tex_a_[3], tex_b_[3];
  double phase_a_[3], phase_b_[3];
};

struct SynthFrame {
  DepthImage depth;  // stored units of K.depth_scale, 0 on miss
  Image color;       // black and masked off on miss
  CameraIntrinsics intrinsics;
  Pose pose;
};

struct SynthSequence {
  std::vector<SynthFrame> frames;
  SynthOracle oracle;
};

/// Ray-casts the primitive for every pose. Views that miss the surface yield empty frames.
SynthSequence synth_scene_frames(const SynthScene& scene, std::span<const Pose> trajectory,
                                 const CameraIntrinsics& K);

/// Cameras at `distance` from `target`, looking at it, with view axes spread uniformly (by solid
/// angle) inside a cone of half-angle max_angle_deg around `axis` (pointing from target to camera).
std::vector<Pose> cone_trajectory(const Vec3d& target, const Vec3d& axis, double distance,
                                  double max_angle_deg, int count, std::uint64_t seed);
/// Cameras at a fixed angular offset from `axis`, evenly spaced in azimuth.
std::vector<Pose> ring_trajectory(const Vec3d& target, const Vec3d& axis, double distance,
                                  double angle_deg, int count, double azimuth0_deg = 0.0);

}  // namespace nslf
