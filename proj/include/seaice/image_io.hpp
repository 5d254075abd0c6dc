#pragma once

#include <png.h>

#include <array>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

#include "seaice/errors.hpp"
#include "seaice/raster.hpp"

namespace seaice {

using Rgb = std::array<std::uint8_t, 3>;

/// 8-bit RGB image, row-major.
struct RgbImage {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<Rgb> pixels;

  RgbImage() = default;
  RgbImage(std::size_t r, std::size_t c, Rgb fill = {0, 0, 0}) : rows(r), cols(c), pixels(r * c, fill) {}
  Rgb& operator()(std::size_t r, std::size_t c) { return pixels[r * cols + c]; }
  const Rgb& operator()(std::size_t r, std::size_t c) const { return pixels[r * cols + c]; }
  friend bool operator==(const RgbImage&, const RgbImage&) = default;
};

inline void write_png(const std::string& path, const RgbImage& image) {
  std::unique_ptr<FILE, int (*)(FILE*)> fp(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!fp) throw Error(path + ": cannot write");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    throw Error("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw Error(path + ": PNG encoding failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(image.cols), png_uint_32(image.rows), 8, PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t r = 0; r < image.rows; ++r) {
    auto* row = const_cast<png_bytep>(reinterpret_cast<const png_byte*>(&image.pixels[r * image.cols]));
    png_write_row(png, row);
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

inline RgbImage read_png(const std::string& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str())) throw Error(path + ": cannot read PNG");
  img.format = PNG_FORMAT_RGB;
  RgbImage out(img.height, img.width);
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&img);
    throw Error(path + ": PNG decoding failed");
  }
  return out;
}

/// ESRI world file: pixel sizes, rotation terms and the centre of the
/// upper-left pixel.
inline void write_world_file(const std::string& path, const GeoTransform& geo) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write");
  out.precision(17);
  out << geo.pixel_width << '\n'
      << 0.0 << '\n'
      << 0.0 << '\n'
      << -geo.pixel_height << '\n'
      << geo.origin_x + 0.5 * geo.pixel_width << '\n'
      << geo.origin_y - 0.5 * geo.pixel_height << '\n';
}

}  // namespace seaice
