#include <gtest/gtest.h>

#include <fstream>
#include <random>

#include "oracles.hpp"
#include "seaice/config.hpp"

using namespace seaice;

TEST(Config, EmptyConfigHasProtocolDefaults) {
  const auto c = parse_config_text("");
  EXPECT_EQ(c.train.batch_size, 24);
  EXPECT_EQ(c.train.optimizer, "adam");
  EXPECT_EQ(c.train.lr_init, 1e-5);
  EXPECT_EQ(c.train.lr_factor, 0.1);
  EXPECT_EQ(c.train.lr_patience_epochs, 5);
  EXPECT_EQ(c.train.lr_min, 1e-8);
  EXPECT_EQ(c.train.early_stop_patience_epochs, 20);
  EXPECT_EQ(c.train.seeds, (std::vector<std::uint64_t>{0, 1, 2}));
  EXPECT_EQ(c.train.max_epochs, 500);
  EXPECT_EQ(c.train.loss.kind, LossKind::CrossEntropy);
  EXPECT_EQ(c.train.loss.focal_gamma, 2.0);
  EXPECT_EQ(c.train.loss.focal_alpha, 1.0);
  EXPECT_EQ(c.train.loss.dice_smooth, 1.0);
  EXPECT_EQ(c.train.loss.ignore_value, 255);
  EXPECT_EQ(c.data.patch_size, 1000u);
  EXPECT_EQ(c.data.patches_per_scene, 100u);
  EXPECT_EQ(c.model.aspp_rates, (std::vector<int>{1, 6, 12, 18}));
  EXPECT_FALSE(c.eval.tiled);
}

TEST(Config, ParsesDottedKeysAndComments) {
  const auto c = parse_config_text(R"(
# smoke run
loss.kind = focal
loss.focal_gamma = 0
train.seeds = 4, 5
train.lr_init = 0.001
data.dir = /data/scenes
eval.tiled = true
)");
  EXPECT_EQ(c.train.loss.kind, LossKind::Focal);
  EXPECT_EQ(c.train.loss.focal_gamma, 0.0);
  EXPECT_EQ(c.train.seeds, (std::vector<std::uint64_t>{4, 5}));
  EXPECT_EQ(c.train.lr_init, 1e-3);
  EXPECT_EQ(c.data.dir, "/data/scenes");
  EXPECT_TRUE(c.eval.tiled);
}

TEST(Config, ErrorsAreConfigErrorsWithLocation) {
  EXPECT_THROW(parse_config_text("loss.kind = hinge"), ConfigError);
  EXPECT_THROW(parse_config_text("no.such.key = 1"), ConfigError);
  EXPECT_THROW(parse_config_text("train.batch_size = many"), ConfigError);
  EXPECT_THROW(parse_config_text("train.batch_size = 0"), ConfigError);
  EXPECT_THROW(parse_config_text("train.lr_min = 1"), ConfigError);
  EXPECT_THROW(parse_config_text("loss.dice_smooth = 0"), ConfigError);
  EXPECT_THROW(parse_config_text("loss.focal_gamma = -1"), ConfigError);
  EXPECT_THROW(parse_config_text("just text"), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/run.cfg"), ConfigError);
  try {
    parse_config_text("\n\ntrain.lr_factor = fast");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":3:"), std::string::npos);
  }
}

TEST(Config, RoundTripsThroughText) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 25; ++trial) {
    RunConfig c;
    c.train.batch_size = int(1 + rng() % 64);
    c.train.lr_init = 1e-6 + u(rng) * 1e-2;
    c.train.lr_min = c.train.lr_init * u(rng) * 0.5 + 1e-12;
    c.train.lr_factor = 0.05 + 0.9 * u(rng);
    c.train.seeds = {rng() % 100, rng() % 100};
    c.train.loss.kind = static_cast<LossKind>(rng() % 3);
    c.train.loss.focal_gamma = 3 * u(rng);
    c.train.loss.dice_smooth = 0.1 + u(rng);
    c.model.aspp_channels = 32 + int(rng() % 256);
    c.data.dir = "/tmp/d" + std::to_string(trial);
    c.data.patch_size = 64 + rng() % 1000;
    c.eval.tiled = rng() % 2;
    c.out_dir = "out" + std::to_string(trial);
    const auto text = to_text(c);
    EXPECT_EQ(parse_config_text(text), c) << text;
    EXPECT_EQ(to_text(parse_config_text(text)), text);
  }
}

TEST(Config, LoadFromFile) {
  const auto dir = oracle::temp_dir("config");
  RunConfig c;
  c.train.loss.kind = LossKind::Dice;
  {
    std::ofstream out(dir / "run.cfg");
    out << to_text(c);
  }
  EXPECT_EQ(load_config((dir / "run.cfg").string()), c);
}
