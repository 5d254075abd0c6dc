#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>
#include <vector>

#include <json.hpp>

#include "seaice/chart_io.hpp"
#include "seaice/config.hpp"
#include "seaice/errors.hpp"
#include "seaice/evaluator.hpp"
#include "seaice/inference.hpp"
#include "seaice/ingest.hpp"
#include "seaice/log.hpp"
#include "seaice/model.hpp"
#include "seaice/patch_sampler.hpp"
#include "seaice/synth.hpp"
#include "seaice/trainer.hpp"

namespace seaice {

namespace fs = std::filesystem;

inline constexpr const char* kSplitFile = "split.json";
inline constexpr const char* kPatchFile = "patches.json";
inline constexpr const char* kLabelDir = "labels";

// ---------------------------------------------------------------------------
// Layout on disk

struct ScenePaths {
  fs::path hh, hv, ia, chart;
};

inline ScenePaths scene_paths(const fs::path& data_dir, const std::string& id) {
  return {data_dir / (id + "_hh.tif"), data_dir / (id + "_hv.tif"), data_dir / (id + "_ia.tif"),
          data_dir / (id + "_chart.geojson")};
}

inline fs::path label_path(const fs::path& prepared_dir, const std::string& id) {
  return prepared_dir / kLabelDir / (id + "_labels.tif");
}

inline fs::path prepared_dir(const RunConfig& config) {
  if (!config.data.prepared_dir.empty()) return config.data.prepared_dir;
  return fs::path(config.data.dir) / "prepared";
}

inline void require_exists(const fs::path& p, const std::string& what) {
  if (!fs::exists(p)) throw ConfigError(what + " not found: " + p.string());
}

/// Scene ids (YYYY-MM) that have an HH band in `data_dir`, sorted.
inline std::vector<std::string> discover_scenes(const fs::path& data_dir) {
  require_exists(data_dir, "data directory");
  static const std::regex pattern(R"((\d{4}-\d{2})_hh\.tif)");
  std::vector<std::string> ids;
  for (const auto& entry : fs::directory_iterator(data_dir)) {
    std::smatch m;
    const auto name = entry.path().filename().string();
    if (std::regex_match(name, m, pattern)) ids.push_back(m[1]);
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

inline SceneStack load_scene(const fs::path& data_dir, const std::string& id) {
  const auto p = scene_paths(data_dir, id);
  for (const auto* f : {&p.hh, &p.hv, &p.ia}) {
    if (!fs::exists(*f)) throw IngestError("scene " + id + ": missing band " + f->string());
  }
  return load_scene(p.hh.string(), p.hv.string(), p.ia.string(), id);
}

inline void write_json(const fs::path& path, const nlohmann::json& j) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write");
  out << j.dump(2) << '\n';
}

inline nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// synth

/// Writes twelve monthly synthetic scenes of `year` into `out_dir`.
inline std::vector<std::string> cmd_synth(const fs::path& out_dir, std::size_t rows, std::size_t cols,
                                          std::uint64_t seed, int year = 2018) {
  std::vector<std::string> ids;
  for (const auto& spec : monthly_specs(rows, cols, seed, year)) {
    write_synthetic_scene(out_dir, generate(spec));
    ids.push_back(spec.scene_id);
  }
  return ids;
}

// ---------------------------------------------------------------------------
// prepare

struct PrepareResult {
  std::vector<std::string> scene_ids;
  SplitManifest split;
  std::vector<Patch> patches;
};

/// Label rasters, split manifest and patch index for the scenes in `data_dir`.
inline PrepareResult cmd_prepare(const fs::path& data_dir, const fs::path& out_dir,
                                 std::size_t patch_size, std::size_t patches_per_scene,
                                 std::uint64_t seed) {
  PrepareResult result;
  result.scene_ids = discover_scenes(data_dir);
  if (result.scene_ids.empty()) throw IngestError(data_dir.string() + ": no scenes named YYYY-MM_hh.tif");
  const int year = std::stoi(result.scene_ids.front().substr(0, 4));
  result.split = build_split(result.scene_ids, year);
  result.split.seed = seed;
  result.split.patch_size = patch_size;
  result.split.patches_per_scene = patches_per_scene;

  fs::create_directories(out_dir / kLabelDir);
  for (const auto& id : result.scene_ids) {
    const auto paths = scene_paths(data_dir, id);
    if (!fs::exists(paths.chart)) {
      throw IngestError("scene " + id + ": missing chart " + paths.chart.string());
    }
    const auto scene = load_scene(data_dir, id);
    const auto labels = rasterize_labels(read_charts(paths.chart.string()), scene);
    write_labels(label_path(out_dir, id).string(), labels);
    if (std::find(result.split.train_scenes.begin(), result.split.train_scenes.end(), id) !=
        result.split.train_scenes.end()) {
      const auto window = result.split.training_window(id, scene.rows(), scene.cols());
      auto p = sample_patches(scene, labels, patches_per_scene, seed, patch_size, window);
      result.patches.insert(result.patches.end(), p.begin(), p.end());
    }
    log_info("prepared " + id);
  }
  write_json(out_dir / kSplitFile, to_json(result.split));
  write_json(out_dir / kPatchFile, to_json(result.patches));
  return result;
}

inline PrepareResult cmd_prepare(const RunConfig& config) {
  return cmd_prepare(config.data.dir, prepared_dir(config), config.data.patch_size,
                     config.data.patches_per_scene, config.data.seed);
}

// ---------------------------------------------------------------------------
// Loading prepared data

struct PreparedData {
  SplitManifest split;
  TrainingData training;
  std::vector<TestScene> test;
};

inline LabelRaster load_prepared_labels(const fs::path& prepared, const std::string& id) {
  const auto path = label_path(prepared, id);
  require_exists(path, "label raster for scene " + id);
  return read_labels(path.string());
}

inline TestScene load_test_scene(const RunConfig& config, const std::string& id) {
  const auto scene = load_scene(fs::path(config.data.dir), id);
  TestScene t;
  t.scene_id = id;
  t.input = normalize(scene);
  t.truth = load_prepared_labels(prepared_dir(config), id);
  if (!t.truth.codes.same_shape(scene.hh)) throw IngestError("labels of " + id + " do not match its scene");
  return t;
}

inline PreparedData load_prepared(const RunConfig& config, bool with_training = true) {
  const auto prepared = prepared_dir(config);
  require_exists(config.data.dir, "data directory");
  require_exists(prepared / kSplitFile, "split manifest");
  PreparedData out;
  try {
    out.split = split_from_json(read_json(prepared / kSplitFile));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError((prepared / kSplitFile).string() + ": " + e.what());
  }
  if (with_training) {
    require_exists(prepared / kPatchFile, "patch index");
    out.training.train_patches = patches_from_json(read_json(prepared / kPatchFile));
    for (const auto& id : out.split.train_scenes) {
      const auto scene = load_scene(fs::path(config.data.dir), id);
      const auto labels = load_prepared_labels(prepared, id);
      out.training.scenes.emplace(id, to_tensors(normalize(scene), labels));
    }
    for (const auto& v : out.split.val_regions) {
      const auto& t = out.training.scenes.at(v.scene_id);
      out.training.val_regions.push_back(
          {v.scene_id, half_window(std::size_t(t.labels.size(0)), std::size_t(t.labels.size(1)), v.half)});
    }
  }
  for (const auto& id : out.split.test_scenes) out.test.push_back(load_test_scene(config, id));
  return out;
}

// ---------------------------------------------------------------------------
// train

inline void check_device(const std::string& device) {
  if (device != "cpu") throw ConfigError("unsupported device '" + device + "'; this build runs on cpu");
}

/// Trains one model per configured seed; artifacts under out_dir/<loss>/<seed>/.
inline ExperimentReport cmd_train(const RunConfig& config, const TrainOptions& options = {}) {
  config.validate();
  check_device(config.device);
  const auto data = load_prepared(config);
  return run_experiment(config, data.training, data.test, config.out_dir, options);
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluationResult {
  std::vector<std::vector<EvalReport>> per_checkpoint;  // [checkpoint][scene]
  std::vector<double> checkpoint_means;
  Summary aggregate;
};

/// Scores each checkpoint on `scene_ids` (the split's test scenes when empty).
/// Per scene: report.json, prediction and error PNGs with world files and
/// confusion.csv. With several checkpoints, each gets its own sub-directory
/// and summary.json carries the mean/min/max over checkpoints.
inline EvaluationResult cmd_evaluate(const RunConfig& config, const std::vector<fs::path>& checkpoints,
                                     std::vector<std::string> scene_ids, const fs::path& out_dir) {
  if (checkpoints.empty()) throw ConfigError("no checkpoint given");
  for (const auto& c : checkpoints) require_exists(c, "checkpoint");
  check_device(config.device);
  if (scene_ids.empty()) scene_ids = load_prepared(config, false).split.test_scenes;

  std::vector<TestScene> scenes;
  for (const auto& id : scene_ids) scenes.push_back(load_test_scene(config, id));

  EvaluationResult result;
  nlohmann::json rows = nlohmann::json::array();
  const PredictOptions options{config.eval.tiled, config.eval.tile_size};
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    auto loaded = load_checkpoint(checkpoints[k]);
    const auto dir = checkpoints.size() == 1 ? out_dir : out_dir / ("checkpoint_" + std::to_string(k));
    std::vector<EvalReport> reports;
    double sum = 0.0;
    for (const auto& scene : scenes) {
      auto pred = predict_scene(*loaded.net, scene.input, scene.truth.geo, options);
      LabelRaster truth = scene.truth;
      for (std::size_t i = 0; i < truth.codes.size(); ++i) {
        if (scene.input.nodata_mask.values()[i]) truth.codes.values()[i] = truth.ignore_value;
      }
      auto report = weighted_f1(pred, truth, scene.scene_id);
      const auto scene_dir = dir / scene.scene_id;
      fs::create_directories(scene_dir);
      write_json(scene_dir / "report.json", to_json(report));
      write_confusion_csv((scene_dir / "confusion.csv").string(), report.confusion);
      const auto maps = render_maps(truth, pred);
      write_georeferenced_png((scene_dir / "prediction").string(), maps.prediction, truth.geo);
      write_georeferenced_png((scene_dir / "errors").string(), maps.errors, truth.geo);
      sum += report.weighted_f1;
      reports.push_back(std::move(report));
    }
    const double mean = sum / double(reports.size());
    result.checkpoint_means.push_back(mean);
    nlohmann::json scene_rows = nlohmann::json::array();
    for (const auto& r : reports) scene_rows.push_back({{"scene", r.scene_id}, {"weighted_f1", r.weighted_f1}});
    rows.push_back({{"checkpoint", checkpoints[k].generic_string()},
                    {"seed", loaded.meta.seed},
                    {"scenes", std::move(scene_rows)},
                    {"mean_weighted_f1", mean}});
    result.per_checkpoint.push_back(std::move(reports));
  }
  result.aggregate = summarize(result.checkpoint_means);
  const auto& a = result.aggregate;
  fs::create_directories(out_dir);
  write_json(out_dir / "summary.json",
             {{"checkpoints", std::move(rows)},
              {"aggregate", {{"mean", a.mean}, {"min", a.min}, {"max", a.max}}},
              {"aggregate_text", summary_line("weighted F1", a)}});
  return result;
}

// ---------------------------------------------------------------------------
// predict and render

/// Label GeoTIFF (ignore value on nodata) for one scene's bands.
inline LabelRaster cmd_predict(const fs::path& checkpoint, const ScenePaths& bands, const fs::path& out_tif,
                               const PredictOptions& options = {}) {
  require_exists(checkpoint, "checkpoint");
  for (const auto* f : {&bands.hh, &bands.hv, &bands.ia}) require_exists(*f, "band");
  auto loaded = load_checkpoint(checkpoint);
  const auto scene = load_scene(bands.hh.string(), bands.hv.string(), bands.ia.string());
  auto pred = predict_scene(*loaded.net, normalize(scene), scene.geo, options);
  if (out_tif.has_parent_path()) fs::create_directories(out_tif.parent_path());
  write_labels(out_tif.string(), pred);
  return pred;
}

/// Colour map of a label raster; with `truth`, also the error map.
inline void cmd_render(const fs::path& labels_tif, const fs::path& out_stem,
                       const fs::path& truth_tif = {}) {
  require_exists(labels_tif, "label raster");
  const auto labels = read_labels(labels_tif.string());
  if (out_stem.has_parent_path()) fs::create_directories(out_stem.parent_path());
  write_georeferenced_png(out_stem.string(), render_labels(labels), labels.geo);
  if (!truth_tif.empty()) {
    require_exists(truth_tif, "truth raster");
    const auto truth = read_labels(truth_tif.string());
    if (!truth.codes.same_shape(labels.codes)) throw Error("truth and labels differ in shape");
    write_georeferenced_png(out_stem.string() + "_errors", render_errors(truth, labels), labels.geo);
  }
}

}  // namespace seaice
