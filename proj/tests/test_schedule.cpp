#include <gtest/gtest.h>

#include <random>

#include "seaice/schedule.hpp"

using namespace seaice;

namespace {

struct Trace {
  std::vector<double> lr_after;  // LR in force after each epoch
  std::vector<int> reductions;
  int stop_epoch = 0;
  int best_epoch = 0;
};

Trace run(const std::vector<double>& losses, TrainingConfig config = {}) {
  PlateauSchedule s(config);
  Trace t;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    const int epoch = int(i) + 1;
    const auto step = s.observe(epoch, losses[i]);
    t.lr_after.push_back(step.next_lr);
    if (step.lr_reduced) t.reductions.push_back(epoch);
    if (step.stop) {
      t.stop_epoch = epoch;
      break;
    }
  }
  t.best_epoch = s.best_epoch();
  return t;
}

}  // namespace

TEST(Schedule, ConstantLossReducesAt6_11_16AndStopsAt21) {
  const auto t = run(std::vector<double>(100, 0.7));
  EXPECT_EQ(t.reductions, (std::vector<int>{6, 11, 16}));
  EXPECT_EQ(t.stop_epoch, 21);
  EXPECT_EQ(t.best_epoch, 1);
  EXPECT_DOUBLE_EQ(t.lr_after[4], 1e-5);
  EXPECT_DOUBLE_EQ(t.lr_after[5], 1e-6);
  EXPECT_DOUBLE_EQ(t.lr_after[10], 1e-7);
  EXPECT_EQ(t.lr_after[15], 1e-8);
  EXPECT_EQ(t.lr_after[20], 1e-8);
}

TEST(Schedule, StrictlyDecreasingLossKeepsInitialRate) {
  std::vector<double> losses;
  for (int i = 0; i < 200; ++i) losses.push_back(1.0 - i * 1e-3);
  const auto t = run(losses);
  EXPECT_TRUE(t.reductions.empty());
  for (double lr : t.lr_after) EXPECT_EQ(lr, 1e-5);
  EXPECT_EQ(t.stop_epoch, 0);
}

TEST(Schedule, EqualLossIsNotAnImprovement) {
  const auto t = run({1.0, 0.5, 0.5, 0.5, 0.5, 0.5, 0.5, 0.4});
  EXPECT_EQ(t.reductions, (std::vector<int>{7}));
  EXPECT_EQ(t.best_epoch, 8);
}

TEST(Schedule, MaxEpochsCapsTraining) {
  TrainingConfig c;
  c.max_epochs = 3;
  std::vector<double> losses = {3, 2, 1, 0.5, 0.1};
  EXPECT_EQ(run(losses, c).stop_epoch, 3);
}

TEST(Schedule, RandomSequencesRespectInvariants) {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    TrainingConfig c;
    c.lr_init = 1e-3;
    c.lr_min = 1e-6;
    std::vector<double> losses;
    double level = 1.0;
    for (int i = 0; i < 300; ++i) {
      level *= u(rng) < 0.3 ? 0.99 : 1.0;
      losses.push_back(level + 0.05 * u(rng));
    }
    PlateauSchedule s(c);
    double prev_lr = c.lr_init, best = INFINITY;
    int since = 0;
    for (int e = 1; e <= 300; ++e) {
      const auto step = s.observe(e, losses[e - 1]);
      EXPECT_LE(step.next_lr, prev_lr);
      EXPECT_GE(step.next_lr, c.lr_min);
      since = losses[e - 1] < best ? 0 : since + 1;
      best = std::min(best, losses[e - 1]);
      EXPECT_EQ(s.best_loss(), best);
      EXPECT_EQ(step.stop, since >= 20 || e == c.max_epochs);
      prev_lr = step.next_lr;
      if (step.stop) break;
    }
  }
}

TEST(Schedule, ConfigValidation) {
  TrainingConfig c;
  EXPECT_NO_THROW(c.validate());
  c.lr_factor = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.optimizer = "sgd";
  EXPECT_THROW(c.validate(), ConfigError);
  c = {};
  c.seeds.clear();
  EXPECT_THROW(c.validate(), ConfigError);
}
