#include "nslf/ingest/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include <spdlog/spdlog.h>

#include "nslf/core/errors.hpp"

namespace nslf {

namespace {

Vec3d random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    const Vec3d v{n(rng), n(rng), n(rng)};
    const double len = norm(v);
    if (len > 1e-9) return v / len;
  }
}

Vec3d clamp01(const Vec3d& c) {
  return {std::clamp(c.x, 0.0, 1.0), std::clamp(c.y, 0.0, 1.0), std::clamp(c.z, 0.0, 1.0)};
}

Vec3d any_perpendicular(const Vec3d& a) {
  const Vec3d helper = std::abs(a.z) < 0.9 ? Vec3d{0, 0, 1} : Vec3d{1, 0, 0};
  return normalized(cross(a, helper));
}

Pose look_from(const Vec3d& eye, const Vec3d& target) {
  const Vec3d z = normalized(target - eye);
  const Vec3d up = std::abs(z.z) < 0.95 ? Vec3d{0, 0, 1} : Vec3d{0, 1, 0};
  return Pose::look_at(eye, target, up);
}

}  // namespace

void SynthScene::validate() const {
  if (surface == SynthSurface::Sphere && !(radius > 0)) throw DomainError("synth: sphere radius must be > 0");
  if (surface == SynthSurface::Plane) {
    if (!(half_size > 0)) throw DomainError("synth: plane half_size must be > 0");
    if (!(norm(normal) > 0)) throw DomainError("synth: plane normal must be nonzero");
  }
  if (!(norm(light_dir) > 0)) throw DomainError("synth: light direction must be nonzero");
  if (ambient < 0 || diffuse < 0 || specular_strength < 0 || specular_exponent <= 0)
    throw DomainError("synth: shading coefficients must be non-negative");
  if (texture_amplitude < 0) throw DomainError("synth: texture amplitude must be non-negative");
}

SynthScene SynthScene::textured_plane(const Vec3d& center, const Vec3d& normal, double half_size) {
  SynthScene s;
  s.surface = SynthSurface::Plane;
  s.center = center;
  s.normal = normalized(normal);
  s.half_size = half_size;
  s.light_dir = normalized(s.normal + Vec3d{0.3, 0.2, 0.0});
  return s;
}

SynthScene SynthScene::shiny_sphere(const Vec3d& center, double radius, double specular_strength) {
  SynthScene s;
  s.surface = SynthSurface::Sphere;
  s.center = center;
  s.radius = radius;
  s.specular_strength = specular_strength;
  return s;
}

SynthOracle::SynthOracle(const SynthScene& scene) : scene_(scene) {
  scene_.validate();
  if (scene_.surface == SynthSurface::Plane) scene_.normal = normalized(scene_.normal);
  light_ = normalized(scene_.light_dir);
  std::mt19937_64 rng(scene_.texture_seed);
  std::uniform_real_distribution<double> phase(0.0, 2 * std::numbers::pi);
  for (int c = 0; c < 3; ++c) {
    tex_a_[c] = random_unit(rng);
    tex_b_[c] = random_unit(rng);
    phase_a_[c] = phase(rng);
    phase_b_[c] = phase(rng);
  }
}

Vec3d SynthOracle::surface_normal(const Vec3d& p) const {
  if (scene_.surface == SynthSurface::Sphere) return normalized(p - scene_.center);
  return scene_.normal;
}

Vec3d SynthOracle::albedo(const Vec3d& p) const {
  const double f = scene_.texture_frequency;
  const Vec3d q = p - scene_.center;
  Vec3d a;
  for (int c = 0; c < 3; ++c) {
    const double t = 0.6 * std::sin(f * dot(tex_a_[c], q) + phase_a_[c]) +
                     0.4 * std::sin(1.7 * f * dot(tex_b_[c], q) + phase_b_[c]);
    a[c] = std::clamp(scene_.base_albedo[c] + scene_.texture_amplitude * t, 0.0, 1.0);
  }
  return a;
}

Vec3d SynthOracle::color(const Vec3d& p, const Vec3d& d) const {
  Vec3d n = surface_normal(p);
  if (dot(n, d) > 0) n = -n;  // face the viewer
  const double ndotl = dot(n, light_);
  const double lambert = std::max(0.0, ndotl);
  Vec3d c = albedo(p) * (scene_.ambient + scene_.diffuse * lambert);
  if (scene_.specular_strength > 0 && ndotl > 0) {
    const Vec3d r = n * (2 * ndotl) - light_;
    const double rv = std::max(0.0, dot(r, -d));
    const double spec = scene_.specular_strength * std::pow(rv, scene_.specular_exponent);
    c += Vec3d{spec, spec, spec};
  }
  return clamp01(c);
}

std::optional<double> SynthOracle::intersect(const Vec3d& o, const Vec3d& dir) const {
  if (scene_.surface == SynthSurface::Sphere) {
    const Vec3d oc = o - scene_.center;
    const double a = dot(dir, dir);
    const double b = dot(oc, dir);
    const double c = dot(oc, oc) - scene_.radius * scene_.radius;
    const double disc = b * b - a * c;
    if (disc < 0) return std::nullopt;
    const double s = std::sqrt(disc);
    // numerically stable roots
    const double q = b > 0 ? -(b + s) : -(b - s);
    double t0 = q / a, t1 = q != 0 ? c / q : t0;
    if (t0 > t1) std::swap(t0, t1);
    if (t0 > 1e-9) return t0;
    if (t1 > 1e-9) return t1;
    return std::nullopt;
  }
  const Vec3d& n = scene_.normal;
  const double denom = dot(n, dir);
  if (std::abs(denom) < 1e-12) return std::nullopt;
  const double t = dot(scene_.center - o, n) / denom;
  if (t <= 1e-9) return std::nullopt;
  const Vec3d local = o + dir * t - scene_.center;
  const Vec3d u = any_perpendicular(n);
  const Vec3d v = cross(n, u);
  if (std::abs(dot(local, u)) > scene_.half_size || std::abs(dot(local, v)) > scene_.half_size)
    return std::nullopt;
  return t;
}

TriangleMesh SynthOracle::mesh(int resolution) const {
  if (scene_.surface == SynthSurface::Sphere)
    return make_sphere_mesh(scene_.center, scene_.radius, resolution, 2 * resolution);
  // same in-plane frame as intersect()
  const Vec3d n = scene_.normal;
  const Vec3d u = any_perpendicular(n);
  const Vec3d v = cross(n, u);
  const double h = scene_.half_size;
  TriangleMesh m;
  for (const auto& [a, b] : {std::pair{-h, -h}, {h, -h}, {h, h}, {-h, h}})
    m.vertices.push_back(Vec3f(scene_.center + u * a + v * b));
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  return m;
}

SynthSequence synth_scene_frames(const SynthScene& scene, std::span<const Pose> trajectory,
                                 const CameraIntrinsics& K) {
  if (trajectory.empty()) throw DomainError("synth: trajectory must not be empty");
  K.validate();
  SynthSequence seq{{}, SynthOracle(scene)};
  seq.frames.reserve(trajectory.size());
  for (std::size_t f = 0; f < trajectory.size(); ++f) {
    const Pose& T = trajectory[f];
    T.validate();
    SynthFrame frame{DepthImage(K.width, K.height), Image(K.width, K.height), K, T};
    frame.color.enable_mask(false);
    const Vec3d o = T.center();
    std::size_t hits = 0;
    for (int v = 0; v < K.height; ++v)
      for (int u = 0; u < K.width; ++u) {
        const Vec3d ray_cam{(u - K.cx) / K.fx, (v - K.cy) / K.fy, 1.0};
        const Vec3d dir = T.rotation * ray_cam;
        const auto t = seq.oracle.intersect(o, dir);
        if (!t) continue;
        // ray_cam has unit z, so t is the camera-frame depth
        const double depth_m = *t;
        if (depth_m >= 65.0) continue;
        const Vec3d p = o + dir * depth_m;
        frame.depth.at(u, v) = static_cast<float>(depth_m / K.depth_scale);
        frame.color.set(u, v, Vec3f(seq.oracle.color(p, normalized(dir))));
        frame.color.mask[frame.color.index(u, v)] = 1;
        ++hits;
      }
    if (hits == 0) spdlog::warn("synth: camera {} does not view the surface; frame is empty", f);
    seq.frames.push_back(std::move(frame));
  }
  return seq;
}

std::vector<Pose> cone_trajectory(const Vec3d& target, const Vec3d& axis, double distance,
                                  double max_angle_deg, int count, std::uint64_t seed) {
  if (count < 1 || !(distance > 0) || max_angle_deg < 0 || max_angle_deg >= 180)
    throw DomainError("cone trajectory: invalid parameters");
  const Vec3d a = normalized(axis);
  const Vec3d e1 = any_perpendicular(a);
  const Vec3d e2 = cross(a, e1);
  const double cos_max = std::cos(max_angle_deg * std::numbers::pi / 180.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<Pose> poses;
  poses.reserve(count);
  for (int i = 0; i < count; ++i) {
    // first camera sits on the axis
    const double cos_t = i == 0 ? 1.0 : 1.0 - uni(rng) * (1.0 - cos_max);
    const double sin_t = std::sqrt(std::max(0.0, 1.0 - cos_t * cos_t));
    const double phi = i == 0 ? 0.0 : 2 * std::numbers::pi * uni(rng);
    const Vec3d dir = a * cos_t + (e1 * std::cos(phi) + e2 * std::sin(phi)) * sin_t;
    poses.push_back(look_from(target + dir * distance, target));
  }
  return poses;
}

std::vector<Pose> ring_trajectory(const Vec3d& target, const Vec3d& axis, double distance,
                                  double angle_deg, int count, double azimuth0_deg) {
  if (count < 1 || !(distance > 0)) throw DomainError("ring trajectory: invalid parameters");
  const Vec3d a = normalized(axis);
  const Vec3d e1 = any_perpendicular(a);
  const Vec3d e2 = cross(a, e1);
  const double t = angle_deg * std::numbers::pi / 180.0;
  std::vector<Pose> poses;
  poses.reserve(count);
  for (int i = 0; i < count; ++i) {
    const double phi = (azimuth0_deg * std::numbers::pi / 180.0) + 2 * std::numbers::pi * i / count;
    const Vec3d dir = a * std::cos(t) + (e1 * std::cos(phi) + e2 * std::sin(phi)) * std::sin(t);
    poses.push_back(look_from(target + dir * distance, target));
  }
  return poses;
}

}  // namespace nslf
