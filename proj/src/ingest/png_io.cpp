#include "nslf/ingest/png_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <vector>

#include "nslf/core/binary_io.hpp"
#include "nslf/core/errors.hpp"

namespace nslf {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::string& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw DataError("cannot open " + path);
  return f;
}

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* what = static_cast<std::string*>(png_get_error_ptr(png));
  if (what) *what = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

struct Decoded {
  int width = 0, height = 0, channels = 0, bit_depth = 0;
  std::vector<std::uint8_t> bytes;  // rows packed, 16-bit big-endian as stored
};

// Decodes to 8-bit RGB or 16-bit gray depending on `want16`.
Decoded decode(const std::string& path, bool want16) {
  FilePtr f = open_file(path, "rb");
  std::string what;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &what, png_error_fn, png_warning_fn);
  if (!png) throw DataError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  Decoded d;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw DataError("png: cannot decode " + path + ": " + what);
  }
  png_init_io(png, f.get());
  png_read_info(png, info);
  const int color_type = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  if (want16) {
    if ((color_type & PNG_COLOR_MASK_COLOR) || depth != 16) {
      png_destroy_read_struct(&png, &info, nullptr);
      throw DataError("png: " + path + " is not a 16-bit single-channel depth image");
    }
  } else {
    if (depth == 16) png_set_strip_16(png);
    if (!(color_type & PNG_COLOR_MASK_COLOR)) png_set_gray_to_rgb(png);
  }
  png_read_update_info(png, info);
  d.width = static_cast<int>(png_get_image_width(png, info));
  d.height = static_cast<int>(png_get_image_height(png, info));
  d.channels = png_get_channels(png, info);
  d.bit_depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  d.bytes.resize(stride * d.height);
  rows.resize(d.height);
  for (int y = 0; y < d.height; ++y) rows[y] = d.bytes.data() + y * stride;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return d;
}

void encode(const std::string& path, int width, int height, int color_type, int bit_depth,
            const std::vector<std::uint8_t>& bytes) {
  FilePtr f = open_file(path, "wb");
  std::string what;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &what, png_error_fn, png_warning_fn);
  if (!png) throw DataError("png: out of memory");
  png_infop info = png_create_info_struct(png);
  const std::size_t stride = bytes.size() / height;
  std::vector<png_bytep> rows(height);
  for (int y = 0; y < height; ++y) rows[y] = const_cast<png_bytep>(bytes.data() + y * stride);
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw DataError("png: cannot write " + path + ": " + what);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, width, height, bit_depth, color_type, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

Image read_png_rgb(const std::string& path) {
  const Decoded d = decode(path, false);
  Image img(d.width, d.height);
  for (std::size_t i = 0; i < img.rgb.size(); ++i) img.rgb[i] = d.bytes[i] / 255.0f;
  return img;
}

void write_png_rgb(const std::string& path, const Image& image) {
  if (image.width <= 0 || image.height <= 0) throw ShapeError("png: empty image");
  std::vector<std::uint8_t> bytes(image.rgb.size());
  for (std::size_t i = 0; i < bytes.size(); ++i) {
    const float v = std::clamp(image.rgb[i], 0.0f, 1.0f);
    bytes[i] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
  }
  encode(path, image.width, image.height, PNG_COLOR_TYPE_RGB, 8, bytes);
}

DepthImage read_png_depth(const std::string& path) {
  const Decoded d = decode(path, true);
  DepthImage depth(d.width, d.height);
  for (std::size_t i = 0; i < depth.values.size(); ++i)
    depth.values[i] = static_cast<float>((d.bytes[2 * i] << 8) | d.bytes[2 * i + 1]);
  return depth;
}

void write_png_depth(const std::string& path, const DepthImage& depth) {
  if (depth.width <= 0 || depth.height <= 0) throw ShapeError("png: empty depth image");
  std::vector<std::uint8_t> bytes(depth.values.size() * 2);
  for (std::size_t i = 0; i < depth.values.size(); ++i) {
    const float v = depth.values[i];
    const long q = std::isfinite(v) ? std::clamp(std::lround(v), 0L, 65535L) : 0L;
    bytes[2 * i] = static_cast<std::uint8_t>(q >> 8);  // PNG stores big-endian samples
    bytes[2 * i + 1] = static_cast<std::uint8_t>(q & 0xff);
  }
  encode(path, depth.width, depth.height, PNG_COLOR_TYPE_GRAY, 16, bytes);
}

void write_float_dump(const std::string& path, const Image& image) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw DataError("cannot open " + path + " for writing");
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(image.width));
  binio::write<std::uint32_t>(os, static_cast<std::uint32_t>(image.height));
  binio::write_f32_array(os, image.rgb);
  if (!os) throw DataError("write failed: " + path);
}

Image read_float_dump(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw DataError("cannot open " + path);
  const auto w = binio::read<std::uint32_t>(is);
  const auto h = binio::read<std::uint32_t>(is);
  if (w == 0 || h == 0 || w > 65536 || h > 65536) throw DataError("float dump: bad dimensions in " + path);
  Image img(static_cast<int>(w), static_cast<int>(h));
  binio::read_f32_array(is, img.rgb);
  return img;
}

}  // namespace nslf
