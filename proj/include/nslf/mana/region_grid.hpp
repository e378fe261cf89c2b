#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <string>

#include "nslf/core/vec.hpp"

namespace nslf {

/// Axis-aligned box split into cubic cells of edge `cell_edge` meters.
struct RegionGridConfig {
  Vec3d b_min{-50.0, -50.0, -50.0};
  Vec3d b_max{50.0, 50.0, 50.0};
  double cell_edge = 4.0;

  void validate() const;
  /// ceil((b_max - b_min) / cell_edge) per axis.
  std::array<int, 3> cell_counts() const;
  bool contains(const Vec3d& p) const;
};

struct RegionIndex {
  int ix = 0, iy = 0, iz = 0;
  auto operator<=>(const RegionIndex&) const = default;
};

struct RegionIndexHash {
  std::size_t operator()(const RegionIndex& r) const noexcept {
    const auto u = [](int v) { return static_cast<std::size_t>(static_cast<std::uint32_t>(v)); };
    return (u(r.ix) * 73856093u) ^ (u(r.iy) * 19349663u) ^ (u(r.iz) * 83492791u);
  }
};

std::string to_string(const RegionIndex& r);

/// floor((p - b_min) / cell_edge) per axis, clamped to the last cell. Throws RoutingError outside
/// the box.
RegionIndex region_of(const Vec3d& p, const RegionGridConfig& cfg);

/// Same as region_of but returns false instead of throwing.
bool try_region_of(const Vec3d& p, const RegionGridConfig& cfg, RegionIndex& out);
/// Overload for hot loops; `counts` must equal cfg.cell_counts().
bool try_region_of(const Vec3d& p, const RegionGridConfig& cfg, const std::array<int, 3>& counts, RegionIndex& out);

/// World position of the region's lower corner.
Vec3d region_origin(const RegionIndex& r, const RegionGridConfig& cfg);

/// Point mapped into the region's unit cube, clamped to [0,1]^3.
Vec3f to_region_unit(const Vec3d& p, const RegionIndex& r, const RegionGridConfig& cfg);

}  // namespace nslf
