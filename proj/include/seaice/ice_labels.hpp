#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "seaice/errors.hpp"
#include "seaice/raster.hpp"

namespace seaice {

/// Ice-type taxonomy. Codes increase with development stage, so comparing
/// codes compares ice age.
enum class IceClass : std::uint8_t {
  Water = 0,
  NewIce = 1,
  YoungIce = 2,
  FirstYearIce = 3,
  OldIce = 4,
};

inline constexpr std::size_t kNumClasses = 5;

inline constexpr std::array<IceClass, kNumClasses> kAllClasses = {
    IceClass::Water, IceClass::NewIce, IceClass::YoungIce, IceClass::FirstYearIce,
    IceClass::OldIce};

constexpr std::uint8_t code(IceClass c) noexcept { return static_cast<std::uint8_t>(c); }

constexpr bool is_class_code(int value) noexcept {
  return value >= 0 && value < static_cast<int>(kNumClasses);
}

inline IceClass ice_class_from_code(int value) {
  if (!is_class_code(value)) {
    throw ChartError("invalid ice class code " + std::to_string(value));
  }
  return static_cast<IceClass>(value);
}

constexpr std::string_view name(IceClass c) noexcept {
  switch (c) {
    case IceClass::Water: return "Water";
    case IceClass::NewIce: return "NewIce";
    case IceClass::YoungIce: return "YoungIce";
    case IceClass::FirstYearIce: return "FirstYearIce";
    case IceClass::OldIce: return "OldIce";
  }
  return "?";
}

/// Closed polygon ring; the closing vertex is implicit.
struct Ring {
  std::vector<PointXY> points;
  friend bool operator==(const Ring&, const Ring&) = default;
};

/// Flat list of rings interpreted with the even-odd rule: an outer ring plus
/// holes, or several disjoint parts of a multipolygon.
using Geometry = std::vector<Ring>;

inline double signed_area(const Ring& ring) noexcept {
  double twice = 0.0;
  const auto& p = ring.points;
  for (std::size_t i = 0, n = p.size(); i < n; ++i) {
    const auto& a = p[i];
    const auto& b = p[(i + 1) % n];
    twice += a.x * b.y - b.x * a.y;
  }
  return 0.5 * twice;
}

namespace detail {

inline double orient(PointXY a, PointXY b, PointXY c) noexcept {
  return (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
}

inline bool within_box(PointXY a, PointXY b, PointXY p) noexcept {
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

inline bool segments_intersect(PointXY a, PointXY b, PointXY c, PointXY d) noexcept {
  const double d1 = orient(c, d, a);
  const double d2 = orient(c, d, b);
  const double d3 = orient(a, b, c);
  const double d4 = orient(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) && ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return (d1 == 0 && within_box(c, d, a)) || (d2 == 0 && within_box(c, d, b)) ||
         (d3 == 0 && within_box(a, b, c)) || (d4 == 0 && within_box(a, b, d));
}

}  // namespace detail

/// True when no two non-adjacent edges of the geometry touch.
inline bool is_simple(const Geometry& geometry) {
  struct Edge {
    PointXY a, b;
    std::size_t ring, index, ring_size;
  };
  std::vector<Edge> edges;
  for (std::size_t r = 0; r < geometry.size(); ++r) {
    const auto& p = geometry[r].points;
    for (std::size_t i = 0; i < p.size(); ++i) {
      edges.push_back({p[i], p[(i + 1) % p.size()], r, i, p.size()});
    }
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    for (std::size_t j = i + 1; j < edges.size(); ++j) {
      const Edge& e = edges[i];
      const Edge& f = edges[j];
      if (e.ring == f.ring) {
        const std::size_t n = e.ring_size;
        if ((e.index + 1) % n == f.index || (f.index + 1) % n == e.index) continue;
      }
      if (detail::segments_intersect(e.a, e.b, f.a, f.b)) return false;
    }
  }
  return true;
}

/// One ice-chart polygon. Concentrations are in tenths.
struct ChartPolygon {
  Geometry geometry;
  int ct = 0;
  std::optional<IceClass> sa;
  std::optional<int> ca;
  std::optional<IceClass> sb;
  std::optional<int> cb;
  bool is_water = false;

  friend bool operator==(const ChartPolygon&, const ChartPolygon&) = default;
};

/// Checks the attribute invariants. Geometry checks are separate because
/// the simplicity test is quadratic in the vertex count.
inline void validate_attributes(const ChartPolygon& p) {
  if (p.ct < 0 || p.ct > 10) throw ChartError("total concentration out of 0..10");
  if (p.is_water) {
    if (p.sa || p.sb || p.ca || p.cb) {
      throw ChartError("water polygon carries ice type attributes");
    }
    return;
  }
  if (!p.sa && !p.sb) throw ChartError("ice polygon without any type attribute");
  if (p.sa.has_value() != p.ca.has_value()) throw ChartError("sa/ca must be given together");
  if (p.sb.has_value() != p.cb.has_value()) throw ChartError("sb/cb must be given together");
  if (!p.sa && p.sb) throw ChartError("sb given without sa");
  for (auto t : {p.sa, p.sb}) {
    if (t && *t == IceClass::Water) throw ChartError("Water is not a valid ice type slot");
  }
  for (auto c : {p.ca, p.cb}) {
    if (c && (*c <= 0 || *c > 10)) throw ChartError("partial concentration out of 1..10");
  }
  if (p.ca.value_or(0) + p.cb.value_or(0) > 10) throw ChartError("ca + cb exceeds 10");
}

inline void validate_geometry(const ChartPolygon& p) {
  if (p.geometry.empty()) throw ChartError("polygon without rings");
  for (const auto& ring : p.geometry) {
    if (ring.points.size() < 3) throw ChartError("ring with fewer than 3 vertices");
    if (signed_area(ring) == 0.0) throw ChartError("ring with zero area");
  }
  if (!is_simple(p.geometry)) throw ChartError("self-intersecting polygon");
}

/// Dominant ice type: the type with the larger partial concentration, the
/// older type on a tie.
inline IceClass dominant_type(const ChartPolygon& p) {
  validate_attributes(p);
  if (p.is_water) return IceClass::Water;
  if (!p.sb) return *p.sa;
  if (*p.ca != *p.cb) return *p.ca > *p.cb ? *p.sa : *p.sb;
  return std::max(*p.sa, *p.sb);
}

using ClassCounts = std::array<std::uint64_t, kNumClasses>;

/// Per-class pixel counts of a label raster; ignore pixels are skipped.
inline ClassCounts class_frequencies(const LabelRaster& labels) {
  ClassCounts counts{};
  for (auto v : labels.codes.values()) {
    if (v == labels.ignore_value) continue;
    if (!is_class_code(v)) throw Error("label raster holds invalid code " + std::to_string(v));
    ++counts[v];
  }
  return counts;
}

}  // namespace seaice
