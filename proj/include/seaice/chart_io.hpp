#pragma once

#include <cmath>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "seaice/errors.hpp"
#include "seaice/ice_labels.hpp"

namespace seaice {

namespace chart_detail {

using nlohmann::json;

/// Integer attribute in tenths; integral floats are accepted, fractional
/// ones rejected.
inline std::optional<int> integer_property(const json& props, const char* key) {
  auto it = props.find(key);
  if (it == props.end() || it->is_null()) return std::nullopt;
  if (it->is_number_integer()) return it->get<int>();
  if (it->is_number_float()) {
    const double v = it->get<double>();
    if (std::floor(v) == v) return static_cast<int>(v);
    throw ChartError(std::string("property '") + key + "' is fractional");
  }
  throw ChartError(std::string("property '") + key + "' is not a number");
}

inline Ring parse_ring(const json& coords) {
  Ring ring;
  for (const auto& pt : coords) {
    if (!pt.is_array() || pt.size() < 2) throw ChartError("bad coordinate");
    ring.points.push_back({pt[0].get<double>(), pt[1].get<double>()});
  }
  if (ring.points.size() > 1 && ring.points.front() == ring.points.back()) {
    ring.points.pop_back();
  }
  return ring;
}

inline Geometry parse_geometry(const json& geometry) {
  const auto type = geometry.at("type").get<std::string>();
  const auto& coords = geometry.at("coordinates");
  Geometry out;
  if (type == "Polygon") {
    for (const auto& ring : coords) out.push_back(parse_ring(ring));
  } else if (type == "MultiPolygon") {
    for (const auto& poly : coords) {
      for (const auto& ring : poly) out.push_back(parse_ring(ring));
    }
  } else {
    throw ChartError("unsupported geometry type " + type);
  }
  return out;
}

inline ChartPolygon parse_feature(const json& feature) {
  ChartPolygon p;
  p.geometry = parse_geometry(feature.at("geometry"));
  const json& props = feature.at("properties");
  p.ct = integer_property(props, "ct").value_or(0);
  if (auto it = props.find("is_water"); it != props.end() && !it->is_null()) {
    if (!it->is_boolean()) throw ChartError("property 'is_water' is not a boolean");
    p.is_water = it->get<bool>();
  }
  if (auto v = integer_property(props, "sa")) p.sa = ice_class_from_code(*v);
  if (auto v = integer_property(props, "sb")) p.sb = ice_class_from_code(*v);
  p.ca = integer_property(props, "ca");
  p.cb = integer_property(props, "cb");
  validate_attributes(p);
  validate_geometry(p);
  return p;
}

}  // namespace chart_detail

/// Parses a chart FeatureCollection. Errors name the source and the
/// offending feature index.
inline std::vector<ChartPolygon> parse_charts(const nlohmann::json& doc,
                                              const std::string& source = "<memory>") {
  if (doc.value("type", "") != "FeatureCollection") {
    throw ChartError(source + ": not a GeoJSON FeatureCollection");
  }
  std::vector<ChartPolygon> out;
  const auto& features = doc.at("features");
  for (std::size_t i = 0; i < features.size(); ++i) {
    try {
      out.push_back(chart_detail::parse_feature(features[i]));
    } catch (const std::exception& e) {
      throw ChartError(source + ": feature " + std::to_string(i) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<ChartPolygon> read_charts(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ChartError(path + ": cannot open");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw ChartError(path + ": " + e.what());
  }
  return parse_charts(doc, path);
}

inline nlohmann::json charts_to_json(const std::vector<ChartPolygon>& polygons, int epsg) {
  using nlohmann::json;
  json features = json::array();
  for (const auto& p : polygons) {
    json rings = json::array();
    for (const auto& ring : p.geometry) {
      json coords = json::array();
      for (const auto& pt : ring.points) coords.push_back({pt.x, pt.y});
      if (!ring.points.empty()) coords.push_back({ring.points.front().x, ring.points.front().y});
      rings.push_back(std::move(coords));
    }
    json props = {{"ct", p.ct}, {"is_water", p.is_water}};
    if (p.sa) props["sa"] = code(*p.sa);
    if (p.ca) props["ca"] = *p.ca;
    if (p.sb) props["sb"] = code(*p.sb);
    if (p.cb) props["cb"] = *p.cb;
    features.push_back({{"type", "Feature"},
                        {"geometry", {{"type", "Polygon"}, {"coordinates", std::move(rings)}}},
                        {"properties", std::move(props)}});
  }
  json doc = {{"type", "FeatureCollection"}, {"features", std::move(features)}};
  if (epsg != 0) {
    doc["crs"] = {{"type", "name"},
                  {"properties", {{"name", "urn:ogc:def:crs:EPSG::" + std::to_string(epsg)}}}};
  }
  return doc;
}

inline void write_charts(const std::string& path, const std::vector<ChartPolygon>& polygons,
                         int epsg) {
  std::ofstream out(path);
  if (!out) throw ChartError(path + ": cannot write");
  out << charts_to_json(polygons, epsg).dump(1) << '\n';
}

}  // namespace seaice
