#include "nslf/mana/region_grid.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

#include "nslf/core/errors.hpp"

namespace nslf {

void RegionGridConfig::validate() const {
  for (int a = 0; a < 3; ++a)
    if (!(b_min[a] < b_max[a]) || !std::isfinite(b_min[a]) || !std::isfinite(b_max[a]))
      throw DomainError("region grid: b_min must be below b_max on every axis");
  if (!(cell_edge > 0) || !std::isfinite(cell_edge)) throw DomainError("region grid: cell_edge must be > 0");
  for (int c : cell_counts())
    if (c > (1 << 20)) throw DomainError("region grid: too many cells per axis");
}

std::array<int, 3> RegionGridConfig::cell_counts() const {
  std::array<int, 3> n{};
  for (int a = 0; a < 3; ++a) n[a] = std::max(1, static_cast<int>(std::ceil((b_max[a] - b_min[a]) / cell_edge)));
  return n;
}

bool RegionGridConfig::contains(const Vec3d& p) const {
  for (int a = 0; a < 3; ++a)
    if (!(p[a] >= b_min[a] && p[a] <= b_max[a])) return false;
  return true;
}

std::string to_string(const RegionIndex& r) { return fmt::format("({},{},{})", r.ix, r.iy, r.iz); }

bool try_region_of(const Vec3d& p, const RegionGridConfig& cfg, RegionIndex& out) {
  return try_region_of(p, cfg, cfg.cell_counts(), out);
}

bool try_region_of(const Vec3d& p, const RegionGridConfig& cfg, const std::array<int, 3>& n, RegionIndex& out) {
  if (!cfg.contains(p)) return false;
  int idx[3];
  for (int a = 0; a < 3; ++a) {
    const int i = static_cast<int>(std::floor((p[a] - cfg.b_min[a]) / cfg.cell_edge));
    idx[a] = std::clamp(i, 0, n[a] - 1);
  }
  out = {idx[0], idx[1], idx[2]};
  return true;
}

RegionIndex region_of(const Vec3d& p, const RegionGridConfig& cfg) {
  RegionIndex r;
  if (!try_region_of(p, cfg, r))
    throw RoutingError(fmt::format("point ({}, {}, {}) is outside the region grid", p.x, p.y, p.z));
  return r;
}

Vec3d region_origin(const RegionIndex& r, const RegionGridConfig& cfg) {
  return cfg.b_min + Vec3d{static_cast<double>(r.ix), static_cast<double>(r.iy), static_cast<double>(r.iz)} * cfg.cell_edge;
}

Vec3f to_region_unit(const Vec3d& p, const RegionIndex& r, const RegionGridConfig& cfg) {
  const Vec3d u = (p - region_origin(r, cfg)) / cfg.cell_edge;
  return Vec3f(Vec3d{std::clamp(u.x, 0.0, 1.0), std::clamp(u.y, 0.0, 1.0), std::clamp(u.z, 0.0, 1.0)});
}

}  // namespace nslf
