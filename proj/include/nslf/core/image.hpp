#pragma once

#include <cstdint>
#include <vector>

#include "nslf/core/vec.hpp"

namespace nslf {

/// Float RGB image with an optional validity mask (empty mask = all valid).
struct Image {
  int width = 0;
  int height = 0;
  std::vector<float> rgb;        // width * height * 3, row-major
  std::vector<std::uint8_t> mask;  // width * height, or empty

  Image() = default;
  Image(int w, int h, Vec3f fill = {0.f, 0.f, 0.f});

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t index(int u, int v) const { return static_cast<std::size_t>(v) * width + u; }

  Vec3f at(int u, int v) const {
    const std::size_t i = 3 * index(u, v);
    return {rgb[i], rgb[i + 1], rgb[i + 2]};
  }
  void set(int u, int v, const Vec3f& c) {
    const std::size_t i = 3 * index(u, v);
    rgb[i] = c.x;
    rgb[i + 1] = c.y;
    rgb[i + 2] = c.z;
  }

  bool has_mask() const { return !mask.empty(); }
  bool valid(std::size_t i) const { return mask.empty() || mask[i] != 0; }
  void enable_mask(bool initial);

  /// Clamp every channel into [0, 1].
  void clamp01();
};

/// Depth image in stored units (meters = value * depth_scale). Zero = invalid.
struct DepthImage {
  int width = 0;
  int height = 0;
  std::vector<float> values;

  DepthImage() = default;
  DepthImage(int w, int h) : width(w), height(h), values(static_cast<std::size_t>(w) * h, 0.f) {}

  float at(int u, int v) const { return values[static_cast<std::size_t>(v) * width + u]; }
  float& at(int u, int v) { return values[static_cast<std::size_t>(v) * width + u]; }
};

}  // namespace nslf
