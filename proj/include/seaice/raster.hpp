#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "seaice/errors.hpp"

namespace seaice {

/// Row-major 2-D grid of values.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::vector<T>& values() noexcept { return data_; }
  const std::vector<T>& values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool same_shape(const auto& other) const noexcept {
    return rows_ == other.rows() && cols_ == other.cols();
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

struct PointXY {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const PointXY&, const PointXY&) = default;
};

/// North-up affine georeference. (origin_x, origin_y) is the outer corner of
/// pixel (0, 0); rows advance southwards.
struct GeoTransform {
  double origin_x = 0.0;
  double origin_y = 0.0;
  double pixel_width = 80.0;
  double pixel_height = 80.0;
  int epsg = 0;

  PointXY pixel_center(double col, double row) const noexcept {
    return {origin_x + (col + 0.5) * pixel_width, origin_y - (row + 0.5) * pixel_height};
  }

  /// Continuous pixel coordinates: integer values fall on pixel corners.
  PointXY to_pixel(PointXY world) const noexcept {
    return {(world.x - origin_x) / pixel_width, (origin_y - world.y) / pixel_height};
  }

  friend bool operator==(const GeoTransform&, const GeoTransform&) = default;
};

inline constexpr std::uint8_t kIgnoreLabel = 255;

/// Per-pixel dominant ice type codes; kIgnoreLabel marks land / unlabeled.
struct LabelRaster {
  Raster<std::uint8_t> codes;
  GeoTransform geo;
  std::uint8_t ignore_value = kIgnoreLabel;

  std::size_t rows() const noexcept { return codes.rows(); }
  std::size_t cols() const noexcept { return codes.cols(); }
  friend bool operator==(const LabelRaster&, const LabelRaster&) = default;
};

/// Co-registered SAR scene: HH and HV backscatter in dB, incidence angle in
/// degrees, and a mask that is true where any band lacks data.
struct SceneStack {
  Raster<float> hh;
  Raster<float> hv;
  Raster<float> incidence;
  Raster<std::uint8_t> nodata_mask;
  GeoTransform geo;
  std::string scene_id;

  std::size_t rows() const noexcept { return hh.rows(); }
  std::size_t cols() const noexcept { return hh.cols(); }
  double pixel_size() const noexcept { return geo.pixel_width; }

  void check_consistent() const {
    if (!hh.same_shape(hv) || !hh.same_shape(incidence) || !hh.same_shape(nodata_mask)) {
      throw IngestError("scene " + scene_id + ": bands differ in shape");
    }
  }
};

/// Band values scaled to [0, 1]; layout is band-major [3][rows][cols]
/// (HH, HV, incidence), matching a CHW tensor.
struct NormalizedStack {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<float> values;
  Raster<std::uint8_t> nodata_mask;

  float& at(std::size_t band, std::size_t r, std::size_t c) {
    return values[(band * rows + r) * cols + c];
  }
  float at(std::size_t band, std::size_t r, std::size_t c) const {
    return values[(band * rows + r) * cols + c];
  }
};

}  // namespace seaice
