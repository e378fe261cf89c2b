#include "nslf/core/image.hpp"

namespace nslf {

Image::Image(int w, int h, Vec3f fill) : width(w), height(h) {
  rgb.resize(static_cast<std::size_t>(w) * h * 3);
  for (std::size_t i = 0; i < pixel_count(); ++i) {
    rgb[3 * i] = fill.x;
    rgb[3 * i + 1] = fill.y;
    rgb[3 * i + 2] = fill.z;
  }
}

void Image::enable_mask(bool initial) { mask.assign(pixel_count(), initial ? 1 : 0); }

void Image::clamp01() {
  for (float& c : rgb) c = c < 0.f ? 0.f : (c > 1.f ? 1.f : c);
}

}  // namespace nslf
