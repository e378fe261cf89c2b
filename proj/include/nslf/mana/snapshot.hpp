#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "nslf/mana/region_grid.hpp"
#include "nslf/models/any_model.hpp"

namespace nslf {

/// Frozen copy of every agent's parameters.
struct Snapshot {
  RegionGridConfig grid;
  std::map<RegionIndex, AnyModel> models;
  std::map<RegionIndex, std::uint64_t> trained_iters;
};

inline const Vec3f kUncoveredColor{0.5f, 0.5f, 0.5f};

struct PredictOptions {
  /// Route points outside the box to the uncovered color instead of throwing RoutingError.
  bool outside_as_uncovered = false;
};

struct Prediction {
  std::vector<Vec3f> colors;
  std::vector<std::uint8_t> covered;  // 1 when a trained agent produced the color
  std::size_t uncovered = 0;
  std::size_t outside = 0;
};

/// Routes each (p, d) to its region's model. Parallel over points.
Prediction predict_batch(const Snapshot& snapshot, std::span<const Vec3d> points, std::span<const Vec3f> dirs,
                         const PredictOptions& options = {});
/// Single-threaded reference with identical results.
Prediction predict_batch_serial(const Snapshot& snapshot, std::span<const Vec3d> points,
                                std::span<const Vec3f> dirs, const PredictOptions& options = {});

/// Runtime checkpoint: `manifest.json` plus one `agent_<ix>_<iy>_<iz>.nslf` model file per agent.
inline constexpr int kRuntimeCheckpointVersion = 1;
void save_snapshot(const std::filesystem::path& dir, const Snapshot& snapshot);
Snapshot load_snapshot(const std::filesystem::path& dir);

}  // namespace nslf
