#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "seaice/errors.hpp"
#include "seaice/ice_labels.hpp"
#include "seaice/image_io.hpp"
#include "seaice/raster.hpp"

namespace seaice {

/// Rows are true classes, columns predicted classes.
struct ConfusionMatrix {
  std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{};

  std::uint64_t total() const noexcept {
    std::uint64_t t = 0;
    for (const auto& row : counts) {
      for (auto v : row) t += v;
    }
    return t;
  }
  friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

struct ClassScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::uint64_t support = 0;
};

struct EvalReport {
  std::string scene_id;
  double weighted_f1 = 0.0;
  std::array<ClassScores, kNumClasses> per_class{};
  ConfusionMatrix confusion;
};

/// Counts (truth, prediction) pairs over pixels whose truth is labeled.
/// A prediction outside the class range on such a pixel is an error.
inline ConfusionMatrix confusion_matrix(const LabelRaster& pred, const LabelRaster& truth) {
  if (!pred.codes.same_shape(truth.codes)) throw Error("prediction and truth differ in shape");
  ConfusionMatrix cm;
  const auto& p = pred.codes.values();
  const auto& t = truth.codes.values();
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] == truth.ignore_value) continue;
    if (!is_class_code(t[i])) throw Error("truth holds invalid code " + std::to_string(t[i]));
    if (!is_class_code(p[i])) {
      throw Error("prediction has no class at a labeled pixel (code " + std::to_string(p[i]) + ")");
    }
    ++cm.counts[t[i]][p[i]];
  }
  return cm;
}

/// Per-class precision/recall/F1 and their support-weighted F1. A class
/// with P + R = 0 scores F1 = 0.
inline EvalReport score(const ConfusionMatrix& cm, std::string scene_id = {}) {
  EvalReport report;
  report.scene_id = std::move(scene_id);
  report.confusion = cm;
  std::uint64_t total_support = 0;
  double weighted = 0.0;
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    std::uint64_t tp = cm.counts[k][k];
    std::uint64_t support = 0;
    std::uint64_t predicted = 0;
    for (std::size_t j = 0; j < kNumClasses; ++j) {
      support += cm.counts[k][j];
      predicted += cm.counts[j][k];
    }
    auto& s = report.per_class[k];
    s.support = support;
    s.precision = predicted ? double(tp) / double(predicted) : 0.0;
    s.recall = support ? double(tp) / double(support) : 0.0;
    s.f1 = (s.precision + s.recall) > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall)
                                          : 0.0;
    weighted += double(support) * s.f1;
    total_support += support;
  }
  if (total_support == 0) throw Error("no evaluable pixels: truth is entirely ignore");
  report.weighted_f1 = weighted / double(total_support);
  return report;
}

inline EvalReport weighted_f1(const LabelRaster& pred, const LabelRaster& truth,
                              std::string scene_id = {}) {
  return score(confusion_matrix(pred, truth), std::move(scene_id));
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json per_class = nlohmann::json::object();
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    const auto& s = r.per_class[k];
    per_class[std::string(name(kAllClasses[k]))] = {
        {"precision", s.precision}, {"recall", s.recall}, {"f1", s.f1}, {"support", s.support}};
  }
  nlohmann::json confusion = nlohmann::json::array();
  for (const auto& row : r.confusion.counts) confusion.push_back(row);
  return {{"scene_id", r.scene_id},
          {"weighted_f1", r.weighted_f1},
          {"per_class", std::move(per_class)},
          {"confusion", std::move(confusion)}};
}

inline void write_confusion_csv(const std::string& path, const ConfusionMatrix& cm) {
  std::ofstream out(path);
  if (!out) throw Error(path + ": cannot write");
  out << "truth\\pred";
  for (auto c : kAllClasses) out << ',' << name(c);
  out << '\n';
  for (std::size_t k = 0; k < kNumClasses; ++k) {
    out << name(kAllClasses[k]);
    for (auto v : cm.counts[k]) out << ',' << v;
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Maps

/// Class colours shared by every rendered figure.
inline constexpr std::array<Rgb, kNumClasses> kClassPalette = {{
    {8, 48, 107},     // Water: dark blue
    {158, 202, 225},  // NewIce: light blue
    {255, 217, 47},   // YoungIce: yellow
    {253, 141, 60},   // FirstYearIce: orange
    {215, 48, 31},    // OldIce: red
}};
inline constexpr Rgb kIgnoreColor = {128, 128, 128};
inline constexpr Rgb kNoErrorColor = {255, 255, 255};
inline constexpr Rgb kErrorColor = {0, 0, 0};

inline Rgb label_color(std::uint8_t v) noexcept {
  return is_class_code(v) ? kClassPalette[v] : kIgnoreColor;
}

inline RgbImage render_labels(const LabelRaster& labels) {
  RgbImage img(labels.rows(), labels.cols());
  for (std::size_t i = 0; i < labels.codes.size(); ++i) img.pixels[i] = label_color(labels.codes.values()[i]);
  return img;
}

/// Black where prediction and truth disagree, white where they agree, gray
/// where the truth is ignore.
inline RgbImage render_errors(const LabelRaster& truth, const LabelRaster& pred) {
  if (!truth.codes.same_shape(pred.codes)) throw Error("prediction and truth differ in shape");
  RgbImage img(truth.rows(), truth.cols());
  for (std::size_t i = 0; i < truth.codes.size(); ++i) {
    const auto t = truth.codes.values()[i];
    img.pixels[i] = t == truth.ignore_value ? kIgnoreColor
                    : t == pred.codes.values()[i] ? kNoErrorColor
                                                  : kErrorColor;
  }
  return img;
}

/// False-colour view of the input (R = HH, G = HV, B = incidence), from a
/// normalised stack.
inline RgbImage render_input(const NormalizedStack& stack) {
  RgbImage img(stack.rows, stack.cols);
  for (std::size_t r = 0; r < stack.rows; ++r) {
    for (std::size_t c = 0; c < stack.cols; ++c) {
      if (stack.nodata_mask(r, c)) {
        img(r, c) = kIgnoreColor;
        continue;
      }
      for (std::size_t b = 0; b < 3; ++b) {
        img(r, c)[b] = static_cast<std::uint8_t>(std::clamp(stack.at(b, r, c), 0.0f, 1.0f) * 255.0f + 0.5f);
      }
    }
  }
  return img;
}

struct RenderedMaps {
  RgbImage prediction;
  RgbImage errors;
};

inline RenderedMaps render_maps(const LabelRaster& truth, const LabelRaster& pred) {
  return {render_labels(pred), render_errors(truth, pred)};
}

/// Writes `<stem>.png` plus its `<stem>.pgw` world file.
inline void write_georeferenced_png(const std::string& stem, const RgbImage& image,
                                    const GeoTransform& geo) {
  write_png(stem + ".png", image);
  write_world_file(stem + ".pgw", geo);
}

}  // namespace seaice
