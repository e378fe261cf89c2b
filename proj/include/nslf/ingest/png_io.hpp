#pragma once

#include <string>

#include "nslf/core/image.hpp"

namespace nslf {

/// 8-bit RGB (gray and RGBA are converted). Values normalized to [0,1].
Image read_png_rgb(const std::string& path);
/// 8-bit RGB; channels are clamped and rounded. The mask is not stored.
void write_png_rgb(const std::string& path, const Image& image);

/// 16-bit single channel, values in stored depth units.
DepthImage read_png_depth(const std::string& path);
/// Values are rounded and clamped to [0, 65535].
void write_png_depth(const std::string& path, const DepthImage& depth);

/// Little-endian dump: u32 width, u32 height, then width*height*3 f32 RGB values.
void write_float_dump(const std::string& path, const Image& image);
Image read_float_dump(const std::string& path);

}  // namespace nslf
