#pragma once

#include <cstddef>
#include <vector>

#include "nslf/core/vec.hpp"

namespace nslf {

/// Region-local training samples: points already normalized into the region's unit cube,
/// unit view directions, and RGB targets in [0,1].
struct TrainBatch {
  std::vector<Vec3f> points;
  std::vector<Vec3f> directions;
  std::vector<Vec3f> colors;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }

  void reserve(std::size_t n) {
    points.reserve(n);
    directions.reserve(n);
    colors.reserve(n);
  }
  void push_back(const Vec3f& p, const Vec3f& d, const Vec3f& c) {
    points.push_back(p);
    directions.push_back(d);
    colors.push_back(c);
  }

  /// Throws ShapeError on length mismatch and DomainError on out-of-cube points.
  void validate() const;
};

}  // namespace nslf
