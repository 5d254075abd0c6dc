#pragma once

// Independent reference implementations used as test oracles. None of these
// call into the library code they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "seaice/ice_labels.hpp"
#include "seaice/raster.hpp"

namespace oracle {

using seaice::PointXY;

/// True if p lies on segment ab (exact arithmetic on the inputs).
inline bool on_segment(PointXY a, PointXY b, PointXY p) {
  const double cross = (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x);
  if (cross != 0.0) return false;
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

/// Even-odd ray casting over all rings; points on any edge count as inside.
inline bool inside(const seaice::Geometry& rings, PointXY p) {
  bool in = false;
  for (const auto& ring : rings) {
    const auto& v = ring.points;
    for (std::size_t i = 0, j = v.size() - 1; i < v.size(); j = i++) {
      if (on_segment(v[i], v[j], p)) return true;
      if ((v[i].y > p.y) != (v[j].y > p.y)) {
        const double x = v[i].x + (p.y - v[i].y) / (v[j].y - v[i].y) * (v[j].x - v[i].x);
        if (p.x < x) in = !in;
      }
    }
  }
  return in;
}

/// Label raster by testing every pixel centre against every polygon in
/// order; later polygons win.
inline seaice::Raster<std::uint8_t> rasterize(const std::vector<seaice::Geometry>& polygons,
                                              const std::vector<std::uint8_t>& values, std::size_t rows,
                                              std::size_t cols, const seaice::GeoTransform& geo) {
  seaice::Raster<std::uint8_t> out(rows, cols, 255);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      const PointXY center{geo.origin_x + (c + 0.5) * geo.pixel_width,
                           geo.origin_y - (r + 0.5) * geo.pixel_height};
      for (std::size_t k = 0; k < polygons.size(); ++k) {
        if (inside(polygons[k], center)) out(r, c) = values[k];
      }
    }
  }
  return out;
}

/// Dominant type by explicit argmax over the two slots, ties to the older
/// (higher-coded) type.
inline int dominant(int sa, int ca, std::optional<int> sb, std::optional<int> cb) {
  int best_type = sa, best_conc = ca;
  if (sb) {
    if (*cb > best_conc || (*cb == best_conc && *sb > best_type)) {
      best_type = *sb;
      best_conc = *cb;
    }
  }
  return best_type;
}

/// Support-weighted F1 from explicit per-class loops over the pixels.
inline double weighted_f1(const std::vector<std::uint8_t>& pred, const std::vector<std::uint8_t>& truth,
                          int num_classes = 5, std::uint8_t ignore = 255) {
  double weighted = 0.0;
  double support_total = 0.0;
  for (int k = 0; k < num_classes; ++k) {
    double tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (truth[i] == ignore) continue;
      const bool p = pred[i] == k, t = truth[i] == k;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const double support = tp + fn;
    const double precision = tp + fp > 0 ? tp / (tp + fp) : 0.0;
    const double recall = support > 0 ? tp / support : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    weighted += support * f1;
    support_total += support;
  }
  return weighted / support_total;
}

/// Random simple polygon: vertices at increasing angles around a centre
/// (star-shaped), optionally snapped to a lattice so that pixel centres
/// land exactly on edges and vertices.
inline seaice::Ring star_ring(std::mt19937_64& rng, PointXY center, double r_min, double r_max,
                              int vertices, double snap = 0.0) {
  std::uniform_real_distribution<double> radius(r_min, r_max);
  std::vector<double> angles(vertices);
  std::uniform_real_distribution<double> angle(0.0, 2 * M_PI);
  for (auto& a : angles) a = angle(rng);
  std::sort(angles.begin(), angles.end());
  seaice::Ring ring;
  for (double a : angles) {
    const double r = radius(rng);
    PointXY p{center.x + r * std::cos(a), center.y + r * std::sin(a)};
    if (snap > 0) {
      p.x = std::round(p.x / snap) * snap;
      p.y = std::round(p.y / snap) * snap;
    }
    if (ring.points.empty() || ring.points.back().x != p.x || ring.points.back().y != p.y) {
      ring.points.push_back(p);
    }
  }
  return ring;
}

/// Closed ring for an axis-aligned rectangle.
inline seaice::Ring rect(double x0, double y0, double x1, double y1) {
  return seaice::Ring{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("seaice_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

}  // namespace oracle
