#include "nslf/render/angle_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "nslf/core/errors.hpp"
#include "nslf/render/metrics.hpp"

namespace nslf {

namespace {

double angle_deg(double cosine) { return std::acos(std::clamp(cosine, -1.0, 1.0)) * 180.0 / std::numbers::pi; }

void init_buckets(AngleEvalResult& acc, const AngleEvalOptions& options) {
  std::vector<double> thresholds = options.thresholds_deg;
  std::sort(thresholds.begin(), thresholds.end());
  for (double t : thresholds) acc.buckets.push_back({t, 0, 0.0, std::nullopt});
}

}  // namespace

TrainedDirections::TrainedDirections(double match_radius) : radius_(match_radius) {
  if (!(match_radius > 0)) throw DomainError("trained directions: match radius must be > 0");
}

std::size_t TrainedDirections::KeyHash::operator()(const Key& k) const {
  std::uint64_t h = static_cast<std::uint64_t>(k.x) * 73856093ull;
  h ^= static_cast<std::uint64_t>(k.y) * 19349663ull;
  h ^= static_cast<std::uint64_t>(k.z) * 83492791ull;
  return static_cast<std::size_t>(h);
}

TrainedDirections::Key TrainedDirections::key_of(const Vec3d& p) const {
  return {static_cast<std::int64_t>(std::floor(p.x / radius_)), static_cast<std::int64_t>(std::floor(p.y / radius_)),
          static_cast<std::int64_t>(std::floor(p.z / radius_))};
}

void TrainedDirections::add(const ColoredPointBatch& batch) {
  for (std::size_t i = 0; i < batch.size(); ++i) {
    cells_[key_of(batch.points[i])].push_back(static_cast<std::uint32_t>(points_.size()));
    points_.push_back(batch.points[i]);
    dirs_.push_back(batch.directions[i]);
  }
}

void TrainedDirections::add_camera(const Pose& pose) { axes_.push_back(pose.rotation.column(2)); }

std::optional<double> TrainedDirections::nearest_angle_deg(const Vec3d& p, const Vec3f& d) const {
  const Key k = key_of(p);
  const double r2 = radius_ * radius_;
  const Vec3d dd(d);
  double best = -2.0;
  for (std::int64_t dz = -1; dz <= 1; ++dz)
    for (std::int64_t dy = -1; dy <= 1; ++dy)
      for (std::int64_t dx = -1; dx <= 1; ++dx) {
        auto it = cells_.find({k.x + dx, k.y + dy, k.z + dz});
        if (it == cells_.end()) continue;
        for (std::uint32_t i : it->second) {
          const Vec3d diff = points_[i] - p;
          if (dot(diff, diff) > r2) continue;
          best = std::max(best, dot(dd, Vec3d(dirs_[i])));
        }
      }
  if (best < -1.5) return std::nullopt;
  return angle_deg(best);
}

std::optional<double> TrainedDirections::nearest_camera_angle_deg(const Pose& pose) const {
  if (axes_.empty()) return std::nullopt;
  const Vec3d a = pose.rotation.column(2);
  double best = -1.0;
  for (const auto& b : axes_) best = std::max(best, dot(a, b));
  return angle_deg(best);
}

void accumulate_angle_eval(AngleEvalResult& acc, const RaycastResult& rays, const Image& rendered,
                           const Image& ground_truth, const Pose& pose, const TrainedDirections& trained,
                           const AngleEvalOptions& options) {
  if (ground_truth.width != rays.width || ground_truth.height != rays.height || rendered.width != rays.width ||
      rendered.height != rays.height)
    throw ShapeError("angle eval: ground truth, render and ray cast sizes differ");
  if (acc.buckets.empty()) init_buckets(acc, options);
  const std::optional<double> frame_angle =
      options.per_frame_camera_angle ? trained.nearest_camera_angle_deg(pose) : std::nullopt;
  const Vec3d c = pose.center();
  for (std::size_t i = 0; i < rays.mask.size(); ++i) {
    if (!rays.mask[i] || !rendered.valid(i) || !ground_truth.valid(i)) continue;
    ++acc.evaluated_pixels;
    std::optional<double> angle;
    if (options.per_frame_camera_angle)
      angle = frame_angle;
    else
      angle = trained.nearest_angle_deg(rays.points[i], Vec3f(normalized(rays.points[i] - c)));
    if (!angle) {
      ++acc.unmatched_pixels;
      continue;
    }
    double e = 0;
    for (int ch = 0; ch < 3; ++ch) {
      const double d = static_cast<double>(rendered.rgb[3 * i + ch]) - ground_truth.rgb[3 * i + ch];
      e += d * d;
    }
    for (auto& b : acc.buckets)
      if (*angle <= b.threshold_deg) {
        b.squared_error += e;
        b.pixels += 1;
      }
  }
  for (auto& b : acc.buckets)
    if (b.pixels > 0) b.psnr = psnr_from_mse(b.squared_error / (3.0 * static_cast<double>(b.pixels)));
}

AngleEvalResult angle_filtered_eval(const Snapshot& snapshot, const TriangleMesh& mesh, const Bvh& bvh,
                                    std::span<const AngleEvalFrame> frames, const TrainedDirections& trained,
                                    const AngleEvalOptions& options) {
  AngleEvalResult result;
  for (const auto& f : frames) {
    if (f.ground_truth.width != f.intrinsics.width || f.ground_truth.height != f.intrinsics.height)
      throw ShapeError("angle eval: ground truth does not match intrinsics");
    const RaycastResult rays = raycast(bvh, mesh, f.intrinsics, f.pose);
    const RenderResult rendered = render_from_raycast(snapshot, rays, f.pose);
    accumulate_angle_eval(result, rays, rendered.image, f.ground_truth, f.pose, trained, options);
  }
  if (result.buckets.empty()) init_buckets(result, options);
  return result;
}

}  // namespace nslf
