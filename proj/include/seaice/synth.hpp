#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "seaice/chart_io.hpp"
#include "seaice/errors.hpp"
#include "seaice/geotiff.hpp"
#include "seaice/ice_labels.hpp"
#include "seaice/ingest.hpp"
#include "seaice/patch_sampler.hpp"
#include "seaice/raster.hpp"

namespace seaice {

struct BandStats {
  double hh_mean;
  double hh_std;
  double hv_mean;
  double hv_std;
};

/// Gaussian class textures in dB; HH means 4 sigma apart, HV 5 sigma apart.
inline constexpr std::array<BandStats, kNumClasses> kDefaultBandStats = {{
    {-22.0, 1.0, -34.0, 1.0},
    {-18.0, 1.0, -29.0, 1.0},
    {-14.0, 1.0, -24.0, 1.0},
    {-10.0, 1.0, -19.0, 1.0},
    {-6.0, 1.0, -14.0, 1.0},
}};

/// Texture for pixels not covered by any region.
inline constexpr BandStats kUncoveredStats = {-15.0, 3.0, -25.0, 3.0};

struct SynthRegion {
  Geometry geometry;  // projected coordinates
  IceClass ice_class = IceClass::Water;
};

struct SynthSpec {
  std::string scene_id = "2018-01";
  std::size_t rows = 512;
  std::size_t cols = 512;
  std::uint64_t seed = 0;
  GeoTransform geo{1'000'000.0, -1'000'000.0, 80.0, 80.0, 3413};
  std::vector<SynthRegion> regions;
  std::array<BandStats, kNumClasses> band_stats = kDefaultBandStats;
  double incidence_west = 19.0;
  double incidence_east = 47.0;
};

struct SynthScene {
  SceneStack scene;
  std::vector<ChartPolygon> charts;
  LabelRaster truth;
};

/// Every pair of classes must differ by at least two standard deviations in
/// HH or in HV.
inline void check_separation(const std::array<BandStats, kNumClasses>& stats) {
  for (std::size_t i = 0; i < kNumClasses; ++i) {
    for (std::size_t j = i + 1; j < kNumClasses; ++j) {
      const auto& a = stats[i];
      const auto& b = stats[j];
      const bool hh = std::abs(a.hh_mean - b.hh_mean) >= 2.0 * std::max(a.hh_std, b.hh_std);
      const bool hv = std::abs(a.hv_mean - b.hv_mean) >= 2.0 * std::max(a.hv_std, b.hv_std);
      if (!hh && !hv) {
        throw ConfigError("synth spec: classes " + std::string(name(kAllClasses[i])) + " and " +
                          std::string(name(kAllClasses[j])) + " are not 2 sigma apart");
      }
    }
  }
}

namespace synth_detail {

inline std::mt19937_64 scene_rng(const SynthSpec& spec, std::uint64_t salt) {
  const std::uint64_t h = sampler_detail::fnv1a(spec.scene_id);
  std::seed_seq seq{std::uint32_t(spec.seed), std::uint32_t(spec.seed >> 32), std::uint32_t(h),
                    std::uint32_t(h >> 32), std::uint32_t(salt)};
  return std::mt19937_64(seq);
}

/// Chart attributes whose dominant type is `c`.
inline ChartPolygon chart_for(IceClass c, Geometry geometry, std::mt19937_64& rng) {
  ChartPolygon p;
  p.geometry = std::move(geometry);
  if (c == IceClass::Water) {
    p.is_water = true;
    return p;
  }
  p.ct = std::uniform_int_distribution<int>(7, 10)(rng);
  p.sa = c;
  if (c == IceClass::NewIce) {
    p.ca = p.ct;
    return p;
  }
  const int ca = std::uniform_int_distribution<int>(p.ct / 2 + 1, p.ct)(rng);
  p.ca = ca;
  if (ca < p.ct) {
    p.sb = static_cast<IceClass>(std::uniform_int_distribution<int>(1, code(c) - 1)(rng));
    p.cb = p.ct - ca;
  }
  return p;
}

}  // namespace synth_detail

inline SynthScene generate(const SynthSpec& spec) {
  if (spec.rows == 0 || spec.cols == 0) throw ConfigError("synth spec: empty shape");
  check_separation(spec.band_stats);

  auto attr_rng = synth_detail::scene_rng(spec, 1);
  SynthScene out;
  for (const auto& region : spec.regions) {
    out.charts.push_back(synth_detail::chart_for(region.ice_class, region.geometry, attr_rng));
  }
  for (const auto& chart : out.charts) validate_geometry(chart);

  // Overlap is judged at pixel centres, the same way labels are burnt.
  Raster<std::uint8_t> claims(spec.rows, spec.cols, 0);
  for (std::size_t i = 0; i < out.charts.size(); ++i) {
    const auto single = rasterize_labels({out.charts[i]}, spec.rows, spec.cols, spec.geo);
    for (std::size_t k = 0; k < claims.size(); ++k) {
      if (single.codes.values()[k] == kIgnoreLabel) continue;
      if (++claims.values()[k] > 1) {
        throw ConfigError("synth spec: region " + std::to_string(i) + " overlaps another region");
      }
    }
  }
  out.truth = rasterize_labels(out.charts, spec.rows, spec.cols, spec.geo);

  auto& scene = out.scene;
  scene.scene_id = spec.scene_id;
  scene.geo = spec.geo;
  scene.hh = Raster<float>(spec.rows, spec.cols);
  scene.hv = Raster<float>(spec.rows, spec.cols);
  scene.incidence = Raster<float>(spec.rows, spec.cols);
  scene.nodata_mask = Raster<std::uint8_t>(spec.rows, spec.cols, 0);
  auto rng = synth_detail::scene_rng(spec, 2);
  std::normal_distribution<double> unit(0.0, 1.0);
  for (std::size_t r = 0; r < spec.rows; ++r) {
    for (std::size_t c = 0; c < spec.cols; ++c) {
      const auto v = out.truth.codes(r, c);
      const BandStats& s = is_class_code(v) ? spec.band_stats[v] : kUncoveredStats;
      scene.hh(r, c) = static_cast<float>(s.hh_mean + s.hh_std * unit(rng));
      scene.hv(r, c) = static_cast<float>(s.hv_mean + s.hv_std * unit(rng));
      const double t = (double(c) + 0.5) / double(spec.cols);
      scene.incidence(r, c) =
          static_cast<float>(spec.incidence_west + t * (spec.incidence_east - spec.incidence_west));
    }
  }
  return out;
}

/// Five quadrilateral bands separated by slanted cuts; all five classes
/// appear in random order. Cut end points sit on pixel corners with an odd or
/// zero horizontal offset, so no pixel centre lies on a shared edge.
inline std::vector<SynthRegion> banded_regions(std::size_t rows, std::size_t cols,
                                               const GeoTransform& geo, bool transpose,
                                               std::mt19937_64& rng) {
  const std::size_t across = transpose ? rows : cols;
  const std::size_t along = transpose ? cols : rows;
  const long step = long(across / kNumClasses);
  const long jitter = std::max(1L, step / 4);
  std::uniform_int_distribution<long> jit(-jitter, jitter);
  std::vector<std::pair<long, long>> cuts;  // (start, end) offsets across the scene
  cuts.emplace_back(0, 0);
  for (std::size_t k = 1; k < kNumClasses; ++k) {
    const long a = long(k) * step + jit(rng);
    long b = long(k) * step + jit(rng);
    if ((b - a) % 2 == 0 && b != a) ++b;
    cuts.emplace_back(a, b);
  }
  cuts.emplace_back(long(across), long(across));

  std::array<IceClass, kNumClasses> order = kAllClasses;
  std::shuffle(order.begin(), order.end(), rng);

  auto world = [&](double across_px, double along_px) {
    const double col = transpose ? along_px : across_px;
    const double row = transpose ? across_px : along_px;
    return PointXY{geo.origin_x + col * geo.pixel_width, geo.origin_y - row * geo.pixel_height};
  };
  std::vector<SynthRegion> regions;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto [a0, b0] = cuts[k];
    const auto [a1, b1] = cuts[k + 1];
    Ring ring{{world(double(a0), 0.0), world(double(a1), 0.0), world(double(b1), double(along)),
               world(double(b0), double(along))}};
    regions.push_back({{ring}, order[k]});
  }
  return regions;
}

/// Specs for twelve monthly scenes of one year.
inline std::vector<SynthSpec> monthly_specs(std::size_t rows, std::size_t cols, std::uint64_t seed,
                                            int year = 2018) {
  std::vector<SynthSpec> specs;
  for (int m = 1; m <= 12; ++m) {
    SynthSpec s;
    s.scene_id = month_id(year, m);
    s.rows = rows;
    s.cols = cols;
    s.seed = seed;
    auto rng = synth_detail::scene_rng(s, 3);
    s.regions = banded_regions(rows, cols, s.geo, m % 2 == 0, rng);
    specs.push_back(std::move(s));
  }
  return specs;
}

/// Writes `<id>_hh.tif`, `<id>_hv.tif`, `<id>_ia.tif` and `<id>_chart.geojson`.
inline void write_synthetic_scene(const std::filesystem::path& dir, const SynthScene& s) {
  std::filesystem::create_directories(dir);
  const auto stem = (dir / s.scene.scene_id).string();
  write_geotiff(stem + "_hh.tif", s.scene.hh, s.scene.geo, -9999.0);
  write_geotiff(stem + "_hv.tif", s.scene.hv, s.scene.geo, -9999.0);
  write_geotiff(stem + "_ia.tif", s.scene.incidence, s.scene.geo, -9999.0);
  write_charts(stem + "_chart.geojson", s.charts, s.scene.geo.epsg);
}

}  // namespace seaice
