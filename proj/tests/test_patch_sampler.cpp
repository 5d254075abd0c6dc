#include <gtest/gtest.h>

#include <algorithm>

#include "seaice/patch_sampler.hpp"

using namespace seaice;

namespace {

std::vector<std::string> months(int year = 2018) {
  std::vector<std::string> ids;
  for (int m = 1; m <= 12; ++m) ids.push_back(month_id(year, m));
  return ids;
}

}  // namespace

TEST(Split, StandardTwelveScenes) {
  const auto s = build_split(months());
  EXPECT_EQ(s.test_scenes, (std::vector<std::string>{"2018-01", "2018-07"}));
  ASSERT_EQ(s.val_regions.size(), 4u);
  std::vector<std::string> val;
  for (const auto& v : s.val_regions) {
    val.push_back(v.scene_id);
    EXPECT_EQ(v.half, Half::Left);
  }
  EXPECT_EQ(val, (std::vector<std::string>{"2018-02", "2018-06", "2018-08", "2018-12"}));
  EXPECT_EQ(s.train_scenes.size(), 10u);
  for (const auto& t : s.test_scenes) {
    EXPECT_EQ(std::count(s.train_scenes.begin(), s.train_scenes.end(), t), 0);
  }
}

TEST(Split, MissingMonthIsNamed) {
  auto ids = months();
  ids.erase(ids.begin() + 4);
  try {
    build_split(ids);
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("2018-05"), std::string::npos);
  }
}

TEST(Split, HalvesAreDisjointAndCoverTheScene) {
  for (std::size_t cols : {1u, 7u, 8u, 513u}) {
    const auto l = half_window(5, cols, Half::Left);
    const auto r = half_window(5, cols, complement(Half::Left));
    EXPECT_EQ(l.col0, 0u);
    EXPECT_EQ(l.cols, cols / 2);
    EXPECT_EQ(r.col0, l.cols);
    EXPECT_EQ(l.cols + r.cols, cols);
    EXPECT_EQ(l.rows, 5u);
  }
  for (std::size_t rows : {6u, 9u}) {
    const auto t = half_window(rows, 4, Half::Top);
    const auto b = half_window(rows, 4, Half::Bottom);
    EXPECT_EQ(t.rows + b.rows, rows);
    EXPECT_EQ(b.row0, t.rows);
  }
  const auto s = build_split(months());
  const auto w = s.training_window("2018-02", 100, 100);
  EXPECT_EQ(w, (Window{0, 50, 100, 50}));
  EXPECT_EQ(s.training_window("2018-03", 100, 100), (Window{0, 0, 100, 100}));
  EXPECT_THROW(s.training_window("2018-01", 100, 100), ConfigError);
}

TEST(Split, JsonRoundTrip) {
  auto s = build_split(months());
  s.seed = 42;
  s.patch_size = 128;
  s.patches_per_scene = 12;
  const auto j = to_json(s);
  EXPECT_TRUE(j.contains("train"));
  EXPECT_TRUE(j.contains("val"));
  EXPECT_TRUE(j.contains("test"));
  EXPECT_EQ(split_from_json(j), s);
}

TEST(SamplePatches, SinglePositionAndDeterminism) {
  const auto exact = sample_patches("2018-03", 1000, 1000, 100, 0);
  ASSERT_EQ(exact.size(), 100u);
  for (const auto& p : exact) {
    EXPECT_EQ(p.row0, 0u);
    EXPECT_EQ(p.col0, 0u);
    EXPECT_EQ(p.size, 1000u);
  }
  EXPECT_EQ(sample_patches("2018-03", 3000, 2500, 50, 9), sample_patches("2018-03", 3000, 2500, 50, 9));
  EXPECT_NE(sample_patches("2018-03", 3000, 2500, 50, 9), sample_patches("2018-03", 3000, 2500, 50, 10));
  EXPECT_NE(sample_patches("2018-03", 3000, 2500, 50, 9), sample_patches("2018-04", 3000, 2500, 50, 9));
  EXPECT_THROW(sample_patches("2018-03", 999, 2000, 1, 0), ConfigError);
}

TEST(SamplePatches, StayInsideRegion) {
  const Window right{0, 700, 1500, 800};
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    for (const auto& p : sample_patches("2018-02", 1500, 1500, 200, seed, 300, right)) {
      ASSERT_GE(p.col0, 700u);
      ASSERT_LE(p.col0 + p.size, 1500u);
      ASSERT_LE(p.row0 + p.size, 1500u);
    }
  }
}

TEST(SamplePatches, CornersAreUniform) {
  // 2000 x 2000 scene, 1000 px patches: corners in [0, 1000]^2, binned 4 x 4.
  const auto patches = sample_patches("2018-03", 2000, 2000, 10000, 0);
  std::array<double, 16> bins{};
  std::array<double, 4> width{};
  for (std::size_t v = 0; v <= 1000; ++v) width[v * 4 / 1001] += 1;
  for (const auto& p : patches) bins[(p.row0 * 4 / 1001) * 4 + p.col0 * 4 / 1001] += 1;
  double chi2 = 0.0;
  for (std::size_t i = 0; i < 16; ++i) {
    const double expected = 10000.0 * width[i / 4] * width[i % 4] / (1001.0 * 1001.0);
    chi2 += (bins[i] - expected) * (bins[i] - expected) / expected;
  }
  EXPECT_LT(chi2, 30.578);  // chi-square, 15 degrees of freedom, p = 0.01
}

TEST(SamplePatches, JsonRoundTrip) {
  const auto p = sample_patches("2018-05", 1200, 1300, 7, 3);
  EXPECT_EQ(patches_from_json(to_json(p)), p);
}
