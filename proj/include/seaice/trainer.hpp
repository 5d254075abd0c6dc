#pragma once

#include <torch/torch.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "seaice/config.hpp"
#include "seaice/errors.hpp"
#include "seaice/evaluator.hpp"
#include "seaice/inference.hpp"
#include "seaice/log.hpp"
#include "seaice/losses.hpp"
#include "seaice/model.hpp"
#include "seaice/patch_sampler.hpp"
#include "seaice/raster.hpp"
#include "seaice/schedule.hpp"

namespace seaice {

/// One scene in tensor form: image [3, H, W] float, labels [H, W] int64.
struct SceneTensors {
  torch::Tensor image;
  torch::Tensor labels;
};

inline SceneTensors to_tensors(const NormalizedStack& stack, const LabelRaster& labels) {
  if (labels.rows() != stack.rows || labels.cols() != stack.cols) {
    throw Error("labels do not match the scene grid");
  }
  SceneTensors t;
  t.image = to_tensor(stack);
  t.labels = torch::from_blob(const_cast<std::uint8_t*>(labels.codes.data()),
                              {std::int64_t(stack.rows), std::int64_t(stack.cols)}, torch::kUInt8)
                 .to(torch::kLong);
  return t;
}

struct RegionRef {
  std::string scene_id;
  Window window;
};

struct TrainingData {
  std::map<std::string, SceneTensors> scenes;
  std::vector<Patch> train_patches;
  std::vector<RegionRef> val_regions;
};

struct EpochRecord {
  int epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;
};

inline nlohmann::json to_json(const std::vector<EpochRecord>& history) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& h : history) {
    out.push_back({{"epoch", h.epoch}, {"train_loss", h.train_loss}, {"val_loss", h.val_loss}, {"lr", h.lr}});
  }
  return out;
}

inline void write_history_csv(const std::filesystem::path& path, const std::vector<EpochRecord>& history) {
  std::ofstream out(path);
  if (!out) throw Error(path.string() + ": cannot write");
  out.precision(10);
  out << "epoch,train_loss,val_loss,lr\n";
  for (const auto& h : history) out << h.epoch << ',' << h.train_loss << ',' << h.val_loss << ',' << h.lr << '\n';
}

struct TrainResult {
  NamedTensors best_state;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<EpochRecord> history;
};

struct TrainOptions {
  std::function<void(const EpochRecord&)> on_epoch;
  /// Where to dump the model when a loss turns non-finite; empty to skip.
  std::filesystem::path diagnostic_dir;
};

namespace trainer_detail {

inline std::pair<torch::Tensor, torch::Tensor> make_batch(const TrainingData& data,
                                                          const std::vector<std::size_t>& order,
                                                          std::size_t begin, std::size_t end) {
  std::vector<torch::Tensor> images, labels;
  for (std::size_t i = begin; i < end; ++i) {
    const Patch& p = data.train_patches[order[i]];
    const auto& scene = data.scenes.at(p.scene_id);
    const auto r0 = std::int64_t(p.row0), c0 = std::int64_t(p.col0), s = std::int64_t(p.size);
    images.push_back(scene.image.slice(1, r0, r0 + s).slice(2, c0, c0 + s));
    labels.push_back(scene.labels.slice(0, r0, r0 + s).slice(1, c0, c0 + s));
  }
  return {torch::stack(images), torch::stack(labels)};
}

/// Pixel-weighted mean of per-region losses, each from one forward pass.
inline double validation_loss(SegmentationNetImpl& net, const TrainingData& data, const LossSpec& spec) {
  torch::NoGradGuard guard;
  net.eval();
  double weighted = 0.0;
  double pixels = 0.0;
  for (const auto& region : data.val_regions) {
    const auto& scene = data.scenes.at(region.scene_id);
    const auto& w = region.window;
    const auto rs = std::int64_t(w.row0), re = std::int64_t(w.row0 + w.rows);
    const auto cs = std::int64_t(w.col0), ce = std::int64_t(w.col0 + w.cols);
    const auto labels = scene.labels.slice(0, rs, re).slice(1, cs, ce).unsqueeze(0);
    const double n = (labels != spec.ignore_value).sum().item<double>();
    if (n == 0) continue;
    const auto logits = net.forward(scene.image.slice(1, rs, re).slice(2, cs, ce).unsqueeze(0));
    weighted += n * loss_and_grad(logits, labels, spec).value.item<double>();
    pixels += n;
  }
  if (pixels == 0) throw TrainingError("validation regions contain no labeled pixels");
  return weighted / pixels;
}

inline void set_learning_rate(torch::optim::Optimizer& optimizer, double lr) {
  for (auto& group : optimizer.param_groups()) {
    static_cast<torch::optim::AdamOptions&>(group.options()).lr(lr);
  }
}

[[noreturn]] inline void abort_non_finite(SegmentationNetImpl& net, const TrainOptions& options,
                                          const std::string& where) {
  std::string msg = "non-finite loss " + where;
  if (!options.diagnostic_dir.empty()) {
    CheckpointMeta meta;
    meta.model = net.config;
    save_checkpoint(options.diagnostic_dir, net, meta);
    msg += "; diagnostic checkpoint written to " + options.diagnostic_dir.string();
  }
  throw TrainingError(msg);
}

}  // namespace trainer_detail

/// Adam with reduce-on-plateau LR and early stopping on the validation loss.
/// Returns the state of the epoch with the smallest validation loss; the
/// model is left holding those weights.
inline TrainResult train(SegmentationNetImpl& net, const TrainingData& data,
                         const TrainingConfig& config, std::uint64_t seed,
                         const TrainOptions& options = {}) {
  config.validate();
  if (data.train_patches.empty()) throw TrainingError("no training patches");
  if (data.val_regions.empty()) throw TrainingError("no validation regions");

  torch::optim::Adam optimizer(net.parameters(), torch::optim::AdamOptions(config.lr_init));
  PlateauSchedule schedule(config);
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), 0x5eedu};
  std::mt19937_64 rng(seq);
  std::vector<std::size_t> order(data.train_patches.size());
  std::iota(order.begin(), order.end(), 0);
  const auto batch = static_cast<std::size_t>(config.batch_size);

  TrainResult result;
  for (int epoch = 1;; ++epoch) {
    const double lr = schedule.lr();
    net.train();
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    int batches = 0;
    for (std::size_t b = 0; b < order.size(); b += batch) {
      const std::size_t e = std::min(order.size(), b + batch);
      // BatchNorm in the image-pooling branch cannot train on one sample.
      if (e - b < 2 && batches > 0) break;
      auto [images, labels] = trainer_detail::make_batch(data, order, b, e);
      auto loss = segmentation_loss(net.forward(images), labels, config.loss);
      const double value = loss.item<double>();
      if (!std::isfinite(value)) {
        trainer_detail::abort_non_finite(net, options, "at epoch " + std::to_string(epoch));
      }
      optimizer.zero_grad();
      loss.backward();
      optimizer.step();
      loss_sum += value;
      ++batches;
    }
    const double val_loss = trainer_detail::validation_loss(net, data, config.loss);
    if (!std::isfinite(val_loss)) {
      trainer_detail::abort_non_finite(net, options, "in validation at epoch " + std::to_string(epoch));
    }
    const EpochRecord record{epoch, loss_sum / std::max(batches, 1), val_loss, lr};
    result.history.push_back(record);
    if (options.on_epoch) options.on_epoch(record);

    const auto step = schedule.observe(epoch, val_loss);
    if (step.improved) {
      result.best_state = snapshot_state(net);
      result.best_epoch = epoch;
      result.best_val_loss = val_loss;
    }
    if (step.stop) break;
    trainer_detail::set_learning_rate(optimizer, step.next_lr);
  }
  restore_state(net, result.best_state);
  return result;
}

// ---------------------------------------------------------------------------
// Multi-seed experiment

struct TestScene {
  std::string scene_id;
  NormalizedStack input;
  LabelRaster truth;
};

struct SeedResult {
  std::uint64_t seed = 0;
  std::filesystem::path checkpoint_dir;
  int best_epoch = 0;
  double best_val_loss = 0.0;
  std::vector<EvalReport> reports;
  double mean_weighted_f1 = 0.0;
  std::vector<EpochRecord> history;
};

struct ExperimentReport {
  LossKind loss = LossKind::CrossEntropy;
  std::vector<SeedResult> seeds;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct Summary {
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

inline Summary summarize(const std::vector<double>& values) {
  if (values.empty()) throw Error("nothing to summarise");
  Summary s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / double(values.size());
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  return s;
}

/// "ce: average weighted F1 0.815 (minimum 0.805, maximum 0.825)".
inline std::string summary_line(std::string_view label, const Summary& s) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "%.*s: average weighted F1 %.3f (minimum %.3f, maximum %.3f)",
                int(label.size()), label.data(), s.mean, s.min, s.max);
  return buf;
}

/// Scores a model on each scene; nodata pixels are excluded from the truth.
inline std::vector<EvalReport> evaluate_scenes(SegmentationNetImpl& net,
                                               const std::vector<TestScene>& scenes,
                                               const PredictOptions& options = {}) {
  std::vector<EvalReport> out;
  for (const auto& scene : scenes) {
    const auto pred = predict_scene(net, scene.input, scene.truth.geo, options);
    LabelRaster truth = scene.truth;
    for (std::size_t i = 0; i < truth.codes.size(); ++i) {
      if (scene.input.nodata_mask.values()[i]) truth.codes.values()[i] = truth.ignore_value;
    }
    out.push_back(weighted_f1(pred, truth, scene.scene_id));
  }
  return out;
}

inline nlohmann::json to_json(const ExperimentReport& r, const std::filesystem::path& relative_to) {
  nlohmann::json seeds = nlohmann::json::array();
  for (const auto& s : r.seeds) {
    nlohmann::json tests = nlohmann::json::array();
    for (const auto& e : s.reports) tests.push_back({{"scene", e.scene_id}, {"weighted_f1", e.weighted_f1}});
    seeds.push_back({{"seed", s.seed},
                     {"checkpoint", std::filesystem::relative(s.checkpoint_dir, relative_to).generic_string()},
                     {"best_epoch", s.best_epoch},
                     {"best_val_loss", s.best_val_loss},
                     {"epochs_run", s.history.size()},
                     {"test", std::move(tests)},
                     {"mean_weighted_f1", s.mean_weighted_f1}});
  }
  const Summary summary{r.mean, r.min, r.max};
  return {{"loss", to_string(r.loss)},
          {"seeds", std::move(seeds)},
          {"summary", {{"mean", r.mean}, {"min", r.min}, {"max", r.max}}},
          {"summary_text", summary_line(to_string(r.loss), summary)}};
}

/// Trains once per configured seed, keeps each best checkpoint under
/// `out_dir/<loss>/<seed>/` and scores it on the test scenes. Per-seed score
/// is the mean over test scenes; the summary spans seeds.
inline ExperimentReport run_experiment(const RunConfig& config, const TrainingData& data,
                                       const std::vector<TestScene>& test_scenes,
                                       const std::filesystem::path& out_dir,
                                       const TrainOptions& options = {}) {
  config.validate();
  ExperimentReport report;
  report.loss = config.train.loss.kind;
  const auto loss_dir = out_dir / std::string(to_string(report.loss));
  std::vector<double> scores;
  for (const auto seed : config.train.seeds) {
    auto net = build_model(config.model, seed);
    const auto seed_dir = loss_dir / std::to_string(seed);
    TrainOptions seed_options = options;
    if (seed_options.diagnostic_dir.empty()) seed_options.diagnostic_dir = seed_dir / "diagnostic";
    auto result = train(*net, data, config.train, seed, seed_options);

    CheckpointMeta meta;
    meta.model = config.model;
    meta.training = to_json(config.train);
    meta.epoch = result.best_epoch;
    meta.val_loss = result.best_val_loss;
    meta.seed = seed;
    meta.history = to_json(result.history);
    save_checkpoint(seed_dir, *net, meta);
    write_history_csv(seed_dir / "history.csv", result.history);

    SeedResult sr;
    sr.seed = seed;
    sr.checkpoint_dir = seed_dir;
    sr.best_epoch = result.best_epoch;
    sr.best_val_loss = result.best_val_loss;
    sr.history = std::move(result.history);
    if (!test_scenes.empty()) {
      sr.reports = evaluate_scenes(*net, test_scenes, {config.eval.tiled, config.eval.tile_size});
      double sum = 0.0;
      for (const auto& e : sr.reports) sum += e.weighted_f1;
      sr.mean_weighted_f1 = sum / double(sr.reports.size());
    }
    scores.push_back(sr.mean_weighted_f1);
    report.seeds.push_back(std::move(sr));
  }
  const auto s = summarize(scores);
  report.mean = s.mean;
  report.min = s.min;
  report.max = s.max;
  std::filesystem::create_directories(loss_dir);
  std::ofstream(loss_dir / "report.json") << to_json(report, out_dir).dump(2) << '\n';
  return report;
}

}  // namespace seaice
