#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "seaice/errors.hpp"
#include "seaice/geotiff.hpp"
#include "seaice/ice_labels.hpp"
#include "seaice/log.hpp"
#include "seaice/raster.hpp"

namespace seaice {

inline constexpr double kTargetPixelSize = 80.0;

// ---------------------------------------------------------------------------
// Scene loading

namespace ingest_detail {

inline bool is_nodata(float v, std::optional<double> nodata) noexcept {
  return std::isnan(v) || (nodata && static_cast<double>(v) == *nodata);
}

/// Samples `src` bilinearly at the centres of the target grid. Flags
/// `invalid` where a contributing source sample is nodata or the centre is
/// outside the source extent.
inline void resample_bilinear(const GeoRaster<float>& src, const GeoTransform& target,
                              std::size_t rows, std::size_t cols, Raster<float>& out,
                              Raster<std::uint8_t>& invalid) {
  const auto src_rows = static_cast<double>(src.data.rows());
  const auto src_cols = static_cast<double>(src.data.cols());
  const auto last_r = static_cast<std::ptrdiff_t>(src.data.rows()) - 1;
  const auto last_c = static_cast<std::ptrdiff_t>(src.data.cols()) - 1;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const PointXY uv = src.geo.to_pixel(target.pixel_center(double(c), double(r)));
      if (uv.x < 0.0 || uv.y < 0.0 || uv.x > src_cols || uv.y > src_rows) {
        out(r, c) = 0.0f;
        invalid(r, c) = 1;
        continue;
      }
      const double fx = uv.x - 0.5;
      const double fy = uv.y - 0.5;
      const double x0 = std::floor(fx);
      const double y0 = std::floor(fy);
      const double ax = fx - x0;
      const double ay = fy - y0;
      const auto cx0 = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(x0), 0, last_c);
      const auto cx1 = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(x0) + 1, 0, last_c);
      const auto cy0 = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(y0), 0, last_r);
      const auto cy1 = std::clamp<std::ptrdiff_t>(std::ptrdiff_t(y0) + 1, 0, last_r);
      const std::ptrdiff_t ys[2] = {cy0, cy1};
      const std::ptrdiff_t xs[2] = {cx0, cx1};
      const double wy[2] = {1.0 - ay, ay};
      const double wx[2] = {1.0 - ax, ax};
      double acc = 0.0;
      bool bad = false;
      for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
          const double w = wy[i] * wx[j];
          if (w == 0.0) continue;
          const float v = src.data(std::size_t(ys[i]), std::size_t(xs[j]));
          if (is_nodata(v, src.nodata)) {
            bad = true;
          } else {
            acc += w * v;
          }
        }
      }
      out(r, c) = bad ? 0.0f : static_cast<float>(acc);
      if (bad) invalid(r, c) = 1;
    }
  }
}

inline bool extents_overlap(const GeoTransform& a, std::size_t a_rows, std::size_t a_cols,
                            const GeoTransform& b, std::size_t b_rows, std::size_t b_cols) {
  const double ax1 = a.origin_x + a_cols * a.pixel_width;
  const double ay1 = a.origin_y - a_rows * a.pixel_height;
  const double bx1 = b.origin_x + b_cols * b.pixel_width;
  const double by1 = b.origin_y - b_rows * b.pixel_height;
  return a.origin_x < bx1 && b.origin_x < ax1 && ay1 < b.origin_y && by1 < a.origin_y;
}

inline std::string scene_id_from_path(const std::string& path) {
  const auto stem = std::filesystem::path(path).stem().string();
  static const std::regex month(R"((\d{4}-\d{2}))");
  std::smatch m;
  if (std::regex_search(stem, m, month)) return m[1];
  return stem;
}

}  // namespace ingest_detail

/// Loads the three bands onto the HH footprint at 80 m pixel size.
inline SceneStack load_scene(const std::string& path_hh, const std::string& path_hv,
                             const std::string& path_incidence, std::string scene_id = {}) {
  using namespace ingest_detail;
  const auto hh = read_geotiff<float>(path_hh);
  const auto hv = read_geotiff<float>(path_hv);
  const auto ia = read_geotiff<float>(path_incidence);

  SceneStack scene;
  scene.scene_id = scene_id.empty() ? scene_id_from_path(path_hh) : std::move(scene_id);
  scene.geo = hh.geo;
  scene.geo.pixel_width = kTargetPixelSize;
  scene.geo.pixel_height = kTargetPixelSize;
  const double width_m = hh.data.cols() * hh.geo.pixel_width;
  const double height_m = hh.data.rows() * hh.geo.pixel_height;
  const auto cols = static_cast<std::size_t>(std::max(1.0, std::round(width_m / kTargetPixelSize)));
  const auto rows = static_cast<std::size_t>(std::max(1.0, std::round(height_m / kTargetPixelSize)));

  scene.nodata_mask = Raster<std::uint8_t>(rows, cols, 0);
  const std::pair<const GeoRaster<float>*, const std::string*> bands[] = {
      {&hh, &path_hh}, {&hv, &path_hv}, {&ia, &path_incidence}};
  Raster<float>* outputs[] = {&scene.hh, &scene.hv, &scene.incidence};
  for (int b = 0; b < 3; ++b) {
    const auto& src = *bands[b].first;
    const auto& path = *bands[b].second;
    if (src.geo.epsg != hh.geo.epsg) {
      throw IngestError(path + ": projection EPSG:" + std::to_string(src.geo.epsg) +
                        " does not match EPSG:" + std::to_string(hh.geo.epsg) + " of " + path_hh);
    }
    if (!extents_overlap(scene.geo, rows, cols, src.geo, src.data.rows(), src.data.cols())) {
      throw IngestError(path + ": extent does not overlap " + path_hh);
    }
    *outputs[b] = Raster<float>(rows, cols);
    resample_bilinear(src, scene.geo, rows, cols, *outputs[b], scene.nodata_mask);
  }
  return scene;
}

// ---------------------------------------------------------------------------
// Normalisation

struct BandRange {
  double lo;
  double hi;
};

/// Fixed clip ranges; identical for every scene.
struct NormalizationRanges {
  BandRange hh{-30.0, 0.0};
  BandRange hv{-35.0, -5.0};
  BandRange incidence{19.0, 47.0};
};

inline float scale_to_unit(float v, BandRange range) noexcept {
  const double t = (static_cast<double>(v) - range.lo) / (range.hi - range.lo);
  return static_cast<float>(std::clamp(t, 0.0, 1.0));
}

inline NormalizedStack normalize(const SceneStack& stack, const NormalizationRanges& ranges = {}) {
  stack.check_consistent();
  NormalizedStack out;
  out.rows = stack.rows();
  out.cols = stack.cols();
  out.values.assign(3 * out.rows * out.cols, 0.0f);
  out.nodata_mask = stack.nodata_mask;
  const Raster<float>* bands[] = {&stack.hh, &stack.hv, &stack.incidence};
  const BandRange band_ranges[] = {ranges.hh, ranges.hv, ranges.incidence};
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t r = 0; r < out.rows; ++r) {
      for (std::size_t c = 0; c < out.cols; ++c) {
        if (stack.nodata_mask(r, c)) continue;
        out.at(b, r, c) = scale_to_unit((*bands[b])(r, c), band_ranges[b]);
      }
    }
  }
  return out;
}

/// Maps normalised values back to physical units (no clipping undone).
inline SceneStack denormalize(const NormalizedStack& n, const GeoTransform& geo,
                              const NormalizationRanges& ranges = {}) {
  SceneStack s;
  s.geo = geo;
  s.nodata_mask = n.nodata_mask;
  Raster<float>* bands[] = {&s.hh, &s.hv, &s.incidence};
  const BandRange band_ranges[] = {ranges.hh, ranges.hv, ranges.incidence};
  for (std::size_t b = 0; b < 3; ++b) {
    *bands[b] = Raster<float>(n.rows, n.cols);
    for (std::size_t r = 0; r < n.rows; ++r) {
      for (std::size_t c = 0; c < n.cols; ++c) {
        const auto& range = band_ranges[b];
        (*bands[b])(r, c) = static_cast<float>(range.lo + n.at(b, r, c) * (range.hi - range.lo));
      }
    }
  }
  return s;
}

// ---------------------------------------------------------------------------
// Rasterisation

namespace ingest_detail {

/// Fills, on one polygon, every pixel whose centre is inside or on the
/// boundary. Works in continuous pixel coordinates; centres sit at k + 0.5.
inline void fill_polygon(const std::vector<std::vector<PointXY>>& rings, std::uint8_t value,
                         Raster<std::uint8_t>& out) {
  double min_v = INFINITY, max_v = -INFINITY;
  for (const auto& ring : rings) {
    for (const auto& p : ring) {
      min_v = std::min(min_v, p.y);
      max_v = std::max(max_v, p.y);
    }
  }
  if (!(min_v <= max_v)) return;
  const auto rows = static_cast<std::ptrdiff_t>(out.rows());
  const auto cols = static_cast<std::ptrdiff_t>(out.cols());
  const std::ptrdiff_t r_begin = std::max<std::ptrdiff_t>(0, std::ptrdiff_t(std::floor(min_v - 0.5)));
  const std::ptrdiff_t r_end = std::min<std::ptrdiff_t>(rows, std::ptrdiff_t(std::ceil(max_v)) + 1);

  // First column whose centre is >= x (or > x when strict).
  auto first_col = [](double x, bool strict) {
    auto c = static_cast<std::ptrdiff_t>(std::ceil(x - 0.5));
    while (c + 0.5 < x || (strict && c + 0.5 == x)) ++c;
    while (c - 1 + 0.5 > x || (!strict && c - 1 + 0.5 == x)) --c;
    return c;
  };
  auto mark = [&](std::ptrdiff_t r, std::ptrdiff_t c0, std::ptrdiff_t c1) {
    c0 = std::max<std::ptrdiff_t>(c0, 0);
    c1 = std::min<std::ptrdiff_t>(c1, cols);
    for (std::ptrdiff_t c = c0; c < c1; ++c) out(std::size_t(r), std::size_t(c)) = value;
  };

  std::vector<double> xs;
  for (std::ptrdiff_t r = r_begin; r < r_end; ++r) {
    const double y = r + 0.5;
    xs.clear();
    for (const auto& ring : rings) {
      const std::size_t n = ring.size();
      for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
        const PointXY& a = ring[i];
        const PointXY& b = ring[j];
        if ((a.y > y) != (b.y > y)) {
          xs.push_back((b.x - a.x) * (y - a.y) / (b.y - a.y) + a.x);
        } else if (a.y == y && b.y == y) {
          // Horizontal edge on the centre line: boundary only.
          mark(r, first_col(std::min(a.x, b.x), false), first_col(std::max(a.x, b.x), true));
        }
        if (a.y == y) mark(r, first_col(a.x, false), first_col(a.x, true));
      }
    }
    std::sort(xs.begin(), xs.end());
    // Even-odd interior: [xs[2k], xs[2k+1]); crossings themselves are boundary.
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      mark(r, first_col(xs[k], false), first_col(xs[k + 1], false));
    }
    for (double x : xs) mark(r, first_col(x, false), first_col(x, true));
  }
}

}  // namespace ingest_detail

/// Burns dominant ice types into a grid by pixel-centre containment. Later
/// polygons overwrite earlier ones where they overlap.
inline LabelRaster rasterize_labels(const std::vector<ChartPolygon>& polygons, std::size_t rows,
                                    std::size_t cols, const GeoTransform& geo) {
  LabelRaster labels;
  labels.geo = geo;
  labels.codes = Raster<std::uint8_t>(rows, cols, kIgnoreLabel);
  if (polygons.empty()) {
    log_warning("rasterize_labels: no polygons, label raster is all ignore");
    return labels;
  }
  std::vector<std::vector<PointXY>> rings;
  for (const auto& polygon : polygons) {
    const std::uint8_t value = code(dominant_type(polygon));
    rings.clear();
    for (const auto& ring : polygon.geometry) {
      if (ring.points.empty()) continue;
      auto& pixel_ring = rings.emplace_back();
      pixel_ring.reserve(ring.points.size());
      for (const auto& p : ring.points) pixel_ring.push_back(geo.to_pixel(p));
    }
    ingest_detail::fill_polygon(rings, value, labels.codes);
  }
  return labels;
}

inline LabelRaster rasterize_labels(const std::vector<ChartPolygon>& polygons,
                                    const SceneStack& grid) {
  return rasterize_labels(polygons, grid.rows(), grid.cols(), grid.geo);
}

inline void write_labels(const std::string& path, const LabelRaster& labels) {
  write_geotiff(path, labels.codes, labels.geo, double(labels.ignore_value));
}

inline LabelRaster read_labels(const std::string& path) {
  auto raster = read_geotiff<std::uint8_t>(path);
  LabelRaster labels;
  labels.codes = std::move(raster.data);
  labels.geo = raster.geo;
  labels.ignore_value = raster.nodata ? static_cast<std::uint8_t>(*raster.nodata) : kIgnoreLabel;
  for (auto v : labels.codes.values()) {
    if (v != labels.ignore_value && !is_class_code(v)) {
      throw IngestError(path + ": invalid label code " + std::to_string(v));
    }
  }
  return labels;
}

}  // namespace seaice
