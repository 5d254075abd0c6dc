#pragma once

// Flat key-value run configuration:
//
//   # full-line comment
//   loss.kind = focal
//   train.lr_init = 1e-5
//   train.seeds = 0, 1, 2
//
// Every key is optional; defaults reproduce the reference training protocol.

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "seaice/errors.hpp"
#include "seaice/loss_spec.hpp"
#include "seaice/model_config.hpp"
#include "seaice/schedule.hpp"

namespace seaice {

struct DataConfig {
  std::string dir;           // raw scenes and charts
  std::string prepared_dir;  // labels, split.json, patches.json
  std::size_t patch_size = 1000;
  std::size_t patches_per_scene = 100;
  std::uint64_t seed = 0;
  friend bool operator==(const DataConfig&, const DataConfig&) = default;
};

struct EvalConfig {
  bool tiled = false;
  std::size_t tile_size = 1024;
  friend bool operator==(const EvalConfig&, const EvalConfig&) = default;
};

struct RunConfig {
  TrainingConfig train;
  ModelConfig model;
  DataConfig data;
  EvalConfig eval;
  std::string out_dir = "runs";
  std::string device = "cpu";

  void validate() const {
    train.validate();
    model.validate();
    if (data.patch_size == 0) throw ConfigError("data.patch_size must be positive");
    if (data.patches_per_scene == 0) throw ConfigError("data.patches_per_scene must be positive");
    if (eval.tile_size <= 256) throw ConfigError("eval.tile_size must exceed the 2 x 128 px overlap");
  }

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

namespace config_detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto* end = value.data() + value.size();
  auto [ptr, ec] = std::from_chars(value.data(), end, out);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError("config key '" + key + "': cannot parse '" + value + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1") return true;
  if (value == "false" || value == "0") return false;
  throw ConfigError("config key '" + key + "': expected true/false, got '" + value + "'");
}

template <typename T>
std::vector<T> parse_list(const std::string& key, const std::string& value) {
  std::vector<T> out;
  std::stringstream ss(value);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(parse_number<T>(key, item));
  }
  return out;
}

inline std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
std::string format_list(const std::vector<T>& values) {
  std::string out;
  for (const auto& v : values) out += (out.empty() ? "" : ", ") + std::to_string(v);
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

inline const std::map<std::string, Field>& fields() {
  using C = RunConfig;
  auto num = [](auto accessor) {
    return Field{[accessor](C& c, const std::string& v) {
                   auto& ref = accessor(c);
                   ref = parse_number<std::remove_reference_t<decltype(ref)>>("", v);
                 },
                 [accessor](const C& c) {
                   const auto& ref = accessor(c);
                   if constexpr (std::is_floating_point_v<std::remove_cvref_t<decltype(ref)>>) {
                     return format_double(ref);
                   } else {
                     return std::to_string(ref);
                   }
                 }};
  };
  auto str = [](auto accessor) {
    return Field{[accessor](C& c, const std::string& v) { accessor(c) = v; },
                 [accessor](const C& c) { return accessor(c); }};
  };
  auto boolean = [](auto accessor) {
    return Field{[accessor](C& c, const std::string& v) { accessor(c) = parse_bool("", v); },
                 [accessor](const C& c) {
                   return std::string(accessor(c) ? "true" : "false");
                 }};
  };
  static const std::map<std::string, Field> table = {
      {"train.batch_size", num([](auto& c) -> auto& { return c.train.batch_size; })},
      {"train.optimizer", str([](auto& c) -> auto& { return c.train.optimizer; })},
      {"train.lr_init", num([](auto& c) -> auto& { return c.train.lr_init; })},
      {"train.lr_factor", num([](auto& c) -> auto& { return c.train.lr_factor; })},
      {"train.lr_patience_epochs", num([](auto& c) -> auto& { return c.train.lr_patience_epochs; })},
      {"train.lr_min", num([](auto& c) -> auto& { return c.train.lr_min; })},
      {"train.early_stop_patience_epochs",
       num([](auto& c) -> auto& { return c.train.early_stop_patience_epochs; })},
      {"train.max_epochs", num([](auto& c) -> auto& { return c.train.max_epochs; })},
      {"train.seeds",
       Field{[](C& c, const std::string& v) { c.train.seeds = parse_list<std::uint64_t>("train.seeds", v); },
             [](const C& c) { return format_list(c.train.seeds); }}},
      {"loss.kind",
       Field{[](C& c, const std::string& v) { c.train.loss.kind = loss_kind_from_string(v); },
             [](const C& c) { return std::string(to_string(c.train.loss.kind)); }}},
      {"loss.focal_gamma", num([](auto& c) -> auto& { return c.train.loss.focal_gamma; })},
      {"loss.focal_alpha", num([](auto& c) -> auto& { return c.train.loss.focal_alpha; })},
      {"loss.dice_smooth", num([](auto& c) -> auto& { return c.train.loss.dice_smooth; })},
      {"model.in_channels", num([](auto& c) -> auto& { return c.model.in_channels; })},
      {"model.num_classes", num([](auto& c) -> auto& { return c.model.num_classes; })},
      {"model.encoder_stages", num([](auto& c) -> auto& { return c.model.encoder_stages; })},
      {"model.aspp_channels", num([](auto& c) -> auto& { return c.model.aspp_channels; })},
      {"model.aspp_rates",
       Field{[](C& c, const std::string& v) { c.model.aspp_rates = parse_list<int>("model.aspp_rates", v); },
             [](const C& c) { return format_list(c.model.aspp_rates); }}},
      {"model.pretrained_encoder", str([](auto& c) -> auto& { return c.model.pretrained_encoder; })},
      {"model.pad_to_stride", boolean([](auto& c) -> auto& { return c.model.pad_to_stride; })},
      {"data.dir", str([](auto& c) -> auto& { return c.data.dir; })},
      {"data.prepared_dir", str([](auto& c) -> auto& { return c.data.prepared_dir; })},
      {"data.patch_size", num([](auto& c) -> auto& { return c.data.patch_size; })},
      {"data.patches_per_scene", num([](auto& c) -> auto& { return c.data.patches_per_scene; })},
      {"data.seed", num([](auto& c) -> auto& { return c.data.seed; })},
      {"eval.tiled", boolean([](auto& c) -> auto& { return c.eval.tiled; })},
      {"eval.tile_size", num([](auto& c) -> auto& { return c.eval.tile_size; })},
      {"out.dir", str([](auto& c) -> auto& { return c.out_dir; })},
      {"run.device", str([](auto& c) -> auto& { return c.device; })},
  };
  return table;
}

}  // namespace config_detail

/// Applies one `key = value` assignment.
inline void set_config_value(RunConfig& config, const std::string& key, const std::string& value) {
  const auto& table = config_detail::fields();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  try {
    it->second.set(config, value);
  } catch (const ConfigError& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

inline RunConfig parse_config(std::istream& in, const std::string& source = "<config>") {
  RunConfig config;
  std::string line;
  for (int line_no = 1; std::getline(in, line); ++line_no) {
    line = config_detail::trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": expected 'key = value'");
    }
    try {
      set_config_value(config, config_detail::trim(line.substr(0, eq)),
                       config_detail::trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  config.validate();
  return config;
}

inline RunConfig parse_config_text(const std::string& text) {
  std::istringstream in(text);
  return parse_config(in);
}

inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open config");
  return parse_config(in, path);
}

/// Serialises every key, one per line, in sorted order.
inline std::string to_text(const RunConfig& config) {
  std::string out;
  for (const auto& [key, field] : config_detail::fields()) {
    out += key + " = " + field.get(config) + "\n";
  }
  return out;
}

}  // namespace seaice
