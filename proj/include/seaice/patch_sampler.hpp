#pragma once

#include <algorithm>
#include <cstdio>
#include <cstdint>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "seaice/errors.hpp"
#include "seaice/raster.hpp"

namespace seaice {

enum class Half { Left, Right, Top, Bottom };

inline std::string_view to_string(Half h) noexcept {
  switch (h) {
    case Half::Left: return "left";
    case Half::Right: return "right";
    case Half::Top: return "top";
    case Half::Bottom: return "bottom";
  }
  return "?";
}

inline Half half_from_string(std::string_view s) {
  if (s == "left") return Half::Left;
  if (s == "right") return Half::Right;
  if (s == "top") return Half::Top;
  if (s == "bottom") return Half::Bottom;
  throw ConfigError("unknown half '" + std::string(s) + "'");
}

inline Half complement(Half h) noexcept {
  switch (h) {
    case Half::Left: return Half::Right;
    case Half::Right: return Half::Left;
    case Half::Top: return Half::Bottom;
    case Half::Bottom: return Half::Top;
  }
  return h;
}

/// Axis-aligned pixel window.
struct Window {
  std::size_t row0 = 0;
  std::size_t col0 = 0;
  std::size_t rows = 0;
  std::size_t cols = 0;
  friend bool operator==(const Window&, const Window&) = default;
};

/// Left/top halves take floor(n / 2); the complementary half gets the rest,
/// so a half and its complement partition the scene.
inline Window half_window(std::size_t rows, std::size_t cols, Half h) noexcept {
  switch (h) {
    case Half::Left: return {0, 0, rows, cols / 2};
    case Half::Right: return {0, cols / 2, rows, cols - cols / 2};
    case Half::Top: return {0, 0, rows / 2, cols};
    case Half::Bottom: return {rows / 2, 0, rows - rows / 2, cols};
  }
  return {};
}

struct ValRegion {
  std::string scene_id;
  Half half = Half::Left;
  friend bool operator==(const ValRegion&, const ValRegion&) = default;
};

/// Train/validation/test assignment. Every scene listed in `train` trains on
/// its full extent, except scenes that also appear in `val`, which train on
/// the complement of their validation half.
struct SplitManifest {
  std::vector<std::string> train_scenes;
  std::vector<ValRegion> val_regions;
  std::vector<std::string> test_scenes;
  std::uint64_t seed = 0;
  std::size_t patch_size = 1000;
  std::size_t patches_per_scene = 100;

  friend bool operator==(const SplitManifest&, const SplitManifest&) = default;

  std::optional<Half> val_half(std::string_view scene) const {
    for (const auto& v : val_regions) {
      if (v.scene_id == scene) return v.half;
    }
    return std::nullopt;
  }

  /// Region of `scene` that training patches may come from.
  Window training_window(std::string_view scene, std::size_t rows, std::size_t cols) const {
    if (std::find(train_scenes.begin(), train_scenes.end(), scene) == train_scenes.end()) {
      throw ConfigError("scene " + std::string(scene) + " is not a training scene");
    }
    if (auto h = val_half(scene)) return half_window(rows, cols, complement(*h));
    return {0, 0, rows, cols};
  }
};

inline constexpr int kTestMonths[] = {1, 7};
inline constexpr int kValidationMonths[] = {2, 6, 8, 12};
inline constexpr Half kValidationHalf = Half::Left;

inline std::string month_id(int year, int month) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

/// Month-keyed split: January and July test, left halves of February, June,
/// August and December validation, everything else training.
inline SplitManifest build_split(const std::vector<std::string>& scene_ids, int year = 2018) {
  const std::set<std::string> given(scene_ids.begin(), scene_ids.end());
  std::vector<std::string> missing;
  for (int m = 1; m <= 12; ++m) {
    if (!given.contains(month_id(year, m))) missing.push_back(month_id(year, m));
  }
  if (!missing.empty()) {
    std::string list;
    for (const auto& m : missing) list += (list.empty() ? "" : ", ") + m;
    throw ConfigError("missing monthly scenes: " + list);
  }
  if (given.size() != 12 || scene_ids.size() != 12) {
    throw ConfigError("expected exactly the twelve monthly scenes of " + std::to_string(year));
  }
  SplitManifest split;
  for (int m = 1; m <= 12; ++m) {
    const auto id = month_id(year, m);
    if (std::ranges::find(kTestMonths, m) != std::end(kTestMonths)) {
      split.test_scenes.push_back(id);
      continue;
    }
    split.train_scenes.push_back(id);
    if (std::ranges::find(kValidationMonths, m) != std::end(kValidationMonths)) {
      split.val_regions.push_back({id, kValidationHalf});
    }
  }
  return split;
}

inline nlohmann::json to_json(const SplitManifest& s) {
  nlohmann::json val = nlohmann::json::array();
  for (const auto& v : s.val_regions) val.push_back({{"scene", v.scene_id}, {"half", to_string(v.half)}});
  return {{"train", s.train_scenes},
          {"val", std::move(val)},
          {"test", s.test_scenes},
          {"seed", s.seed},
          {"patch_size", s.patch_size},
          {"patches_per_scene", s.patches_per_scene}};
}

inline SplitManifest split_from_json(const nlohmann::json& j) {
  SplitManifest s;
  try {
    s.train_scenes = j.at("train").get<std::vector<std::string>>();
    s.test_scenes = j.at("test").get<std::vector<std::string>>();
    for (const auto& v : j.at("val")) {
      s.val_regions.push_back({v.at("scene").get<std::string>(),
                               half_from_string(v.at("half").get<std::string>())});
    }
    s.seed = j.at("seed").get<std::uint64_t>();
    s.patch_size = j.at("patch_size").get<std::size_t>();
    s.patches_per_scene = j.at("patches_per_scene").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("split manifest: ") + e.what());
  }
  return s;
}

/// Square training window inside a scene.
struct Patch {
  std::string scene_id;
  std::size_t row0 = 0;
  std::size_t col0 = 0;
  std::size_t size = 1000;
  friend bool operator==(const Patch&, const Patch&) = default;
};

namespace sampler_detail {

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace sampler_detail

/// Draws `n` patch corners uniformly over every position where a
/// `patch_size` window fits inside `region` (the whole scene by default).
/// The draw depends only on (scene_id, seed).
inline std::vector<Patch> sample_patches(const std::string& scene_id, std::size_t scene_rows,
                                         std::size_t scene_cols, std::size_t n, std::uint64_t seed,
                                         std::size_t patch_size = 1000,
                                         std::optional<Window> region = std::nullopt) {
  const Window w = region.value_or(Window{0, 0, scene_rows, scene_cols});
  if (w.row0 + w.rows > scene_rows || w.col0 + w.cols > scene_cols) {
    throw ConfigError("sampling region exceeds scene " + scene_id);
  }
  if (patch_size == 0 || w.rows < patch_size || w.cols < patch_size) {
    throw ConfigError("scene " + scene_id + " region " + std::to_string(w.rows) + "x" +
                      std::to_string(w.cols) + " is smaller than patch size " +
                      std::to_string(patch_size));
  }
  const std::uint64_t h = sampler_detail::fnv1a(scene_id);
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(h),
                    std::uint32_t(h >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<std::size_t> rows(0, w.rows - patch_size);
  std::uniform_int_distribution<std::size_t> cols(0, w.cols - patch_size);
  std::vector<Patch> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = rows(rng);
    const std::size_t c = cols(rng);
    out.push_back({scene_id, w.row0 + r, w.col0 + c, patch_size});
  }
  return out;
}

inline std::vector<Patch> sample_patches(const SceneStack& scene, const LabelRaster& labels,
                                         std::size_t n, std::uint64_t seed,
                                         std::size_t patch_size = 1000,
                                         std::optional<Window> region = std::nullopt) {
  if (!scene.hh.same_shape(labels.codes)) {
    throw ConfigError("labels do not match scene " + scene.scene_id);
  }
  return sample_patches(scene.scene_id, scene.rows(), scene.cols(), n, seed, patch_size, region);
}

inline nlohmann::json to_json(const std::vector<Patch>& patches) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : patches) {
    out.push_back({{"scene", p.scene_id}, {"row0", p.row0}, {"col0", p.col0}, {"size", p.size}});
  }
  return out;
}

inline std::vector<Patch> patches_from_json(const nlohmann::json& j) {
  std::vector<Patch> out;
  try {
    for (const auto& p : j) {
      out.push_back({p.at("scene").get<std::string>(), p.at("row0").get<std::size_t>(),
                     p.at("col0").get<std::size_t>(), p.at("size").get<std::size_t>()});
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("patch index: ") + e.what());
  }
  return out;
}

}  // namespace seaice
