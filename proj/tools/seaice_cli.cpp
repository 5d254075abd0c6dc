// Command-line entry points: prepare, train, evaluate, predict, synth, render.
#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "seaice.hpp"

namespace {

struct Flags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string loss;
  std::string out;
  bool tiled = false;
  std::string device;
};

seaice::RunConfig resolve(const Flags& f) {
  auto config = f.config.empty() ? seaice::RunConfig{} : seaice::load_config(f.config);
  if (f.seed) {
    config.train.seeds = {*f.seed};
    config.data.seed = *f.seed;
  }
  if (!f.loss.empty()) config.train.loss.kind = seaice::loss_kind_from_string(f.loss);
  if (!f.out.empty()) config.out_dir = f.out;
  if (f.tiled) config.eval.tiled = true;
  if (!f.device.empty()) config.device = f.device;
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sea-ice type segmentation of SAR scenes"};
  app.require_subcommand(1);
  app.fallthrough();

  Flags flags;
  app.add_option("--config", flags.config, "key = value run configuration")->check(CLI::ExistingFile);
  app.add_option("--seed", flags.seed, "single seed (overrides train.seeds and data.seed)");
  app.add_option("--loss", flags.loss, "loss function")->check(CLI::IsMember({"ce", "dice", "focal"}));
  app.add_option("--out", flags.out, "output directory (file for predict, stem for render)");
  app.add_flag("--tiled", flags.tiled, "tiled inference with 128 px overlap");
  app.add_option("--device", flags.device, "compute device")->check(CLI::IsMember({"cpu", "cuda"}));

  auto* prepare = app.add_subcommand("prepare", "label rasters, split manifest and patch index");
  std::string data_dir, prepared;
  prepare->add_option("--data", data_dir, "scene directory (data.dir)");
  prepare->add_option("--prepared", prepared, "output directory (data.prepared_dir)");

  auto* train = app.add_subcommand("train", "train one model per seed and score the test scenes");

  auto* evaluate = app.add_subcommand("evaluate", "score checkpoints and render maps");
  std::vector<std::string> checkpoints, scenes;
  evaluate->add_option("--checkpoint", checkpoints, "checkpoint directory or checkpoint.json")->required();
  evaluate->add_option("--scene", scenes, "scene id (default: the split's test scenes)");

  auto* predict = app.add_subcommand("predict", "label GeoTIFF for one scene");
  std::string checkpoint, hh, hv, ia;
  predict->add_option("--checkpoint", checkpoint)->required();
  predict->add_option("--hh", hh)->required();
  predict->add_option("--hv", hv)->required();
  predict->add_option("--ia", ia)->required();

  auto* synth = app.add_subcommand("synth", "write twelve synthetic monthly scenes");
  std::size_t rows = 512, cols = 512;
  int year = 2018;
  synth->add_option("--rows", rows);
  synth->add_option("--cols", cols);
  synth->add_option("--year", year);

  auto* render = app.add_subcommand("render", "colour PNG of a label GeoTIFF");
  std::string labels, truth;
  render->add_option("--labels", labels)->required();
  render->add_option("--truth", truth, "truth raster; also writes the error map");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    auto config = resolve(flags);
    if (*prepare) {
      if (!data_dir.empty()) config.data.dir = data_dir;
      if (!prepared.empty()) config.data.prepared_dir = prepared;
      if (config.data.dir.empty()) throw seaice::ConfigError("data.dir is not set");
      const auto r = seaice::cmd_prepare(config);
      std::cout << r.scene_ids.size() << " scenes, " << r.patches.size() << " patches -> "
                << seaice::prepared_dir(config).string() << '\n';
    } else if (*train) {
      seaice::TrainOptions options;
      options.on_epoch = [](const seaice::EpochRecord& r) {
        char line[128];
        std::snprintf(line, sizeof line, "epoch %d train %.6f val %.6f lr %.3g", r.epoch, r.train_loss,
                      r.val_loss, r.lr);
        seaice::log_info(line);
      };
      const auto report = seaice::cmd_train(config, options);
      std::cout << seaice::summary_line(seaice::to_string(report.loss), {report.mean, report.min, report.max})
                << '\n';
    } else if (*evaluate) {
      std::vector<std::filesystem::path> paths(checkpoints.begin(), checkpoints.end());
      const auto out = flags.out.empty() ? std::filesystem::path(config.out_dir) / "eval"
                                         : std::filesystem::path(flags.out);
      const auto r = seaice::cmd_evaluate(config, paths, scenes, out);
      std::cout << seaice::summary_line("weighted F1", r.aggregate) << '\n';
    } else if (*predict) {
      if (flags.out.empty()) throw seaice::ConfigError("predict needs --out <labels.tif>");
      seaice::check_device(config.device);
      seaice::cmd_predict(checkpoint, {hh, hv, ia, {}}, flags.out,
                          {config.eval.tiled, config.eval.tile_size});
    } else if (*synth) {
      if (flags.out.empty()) throw seaice::ConfigError("synth needs --out <directory>");
      const auto ids = seaice::cmd_synth(flags.out, rows, cols, flags.seed.value_or(0), year);
      std::cout << ids.size() << " scenes -> " << flags.out << '\n';
    } else if (*render) {
      if (flags.out.empty()) throw seaice::ConfigError("render needs --out <stem>");
      seaice::cmd_render(labels, flags.out, truth);
    }
  } catch (const seaice::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
