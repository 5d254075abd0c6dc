#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "oracles.hpp"
#include "seaice/chart_io.hpp"
#include "seaice/synth.hpp"

using namespace seaice;

namespace {

SynthSpec two_region_spec() {
  SynthSpec s;
  s.rows = 64;
  s.cols = 64;
  s.seed = 3;
  const double x0 = s.geo.origin_x, y0 = s.geo.origin_y;
  s.regions = {{{oracle::rect(x0, y0, x0 + 32 * 80.0, y0 - 64 * 80.0)}, IceClass::Water},
               {{oracle::rect(x0 + 32 * 80.0, y0, x0 + 64 * 80.0, y0 - 64 * 80.0)}, IceClass::OldIce}};
  return s;
}

SynthSpec banded_spec(std::uint64_t seed, std::size_t n = 512) {
  SynthSpec s;
  s.rows = s.cols = n;
  s.seed = seed;
  std::mt19937_64 rng(seed);
  s.regions = banded_regions(n, n, s.geo, seed % 2 == 1, rng);
  return s;
}

double log_likelihood(const BandStats& s, double hh, double hv) {
  const double a = (hh - s.hh_mean) / s.hh_std, b = (hv - s.hv_mean) / s.hv_std;
  return -0.5 * (a * a + b * b) - std::log(s.hh_std * s.hv_std);
}

}  // namespace

TEST(Synth, TwoRegionSpec) {
  const auto out = generate(two_region_spec());
  ASSERT_EQ(out.charts.size(), 2u);
  std::set<std::uint8_t> values(out.truth.codes.values().begin(), out.truth.codes.values().end());
  EXPECT_EQ(values, (std::set<std::uint8_t>{0, 4}));
  EXPECT_EQ(dominant_type(out.charts[0]), IceClass::Water);
  EXPECT_EQ(dominant_type(out.charts[1]), IceClass::OldIce);
}

TEST(Synth, SameSpecAndSeedIsBitIdentical) {
  const auto a = generate(banded_spec(7, 128));
  const auto b = generate(banded_spec(7, 128));
  EXPECT_EQ(a.scene.hh, b.scene.hh);
  EXPECT_EQ(a.scene.hv, b.scene.hv);
  EXPECT_EQ(a.scene.incidence, b.scene.incidence);
  EXPECT_EQ(a.charts, b.charts);
  EXPECT_EQ(a.truth.codes, b.truth.codes);
  auto other = banded_spec(7, 128);
  other.seed = 8;
  EXPECT_NE(generate(other).scene.hh, a.scene.hh);
}

TEST(Synth, TruthEqualsRasterizationOfItsOwnCharts) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const auto out = generate(banded_spec(seed, 200));
    EXPECT_EQ(rasterize_labels(out.charts, out.scene).codes, out.truth.codes);
    for (std::size_t i = 0; i < out.charts.size(); ++i) {
      EXPECT_EQ(dominant_type(out.charts[i]), banded_spec(seed, 200).regions[i].ice_class);
    }
  }
}

TEST(Synth, BandedRegionsTileTheSceneWithAllClasses) {
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    const auto out = generate(banded_spec(seed, 96));
    const auto counts = class_frequencies(out.truth);
    std::uint64_t total = 0;
    for (auto c : counts) {
      EXPECT_GT(c, 0u);
      total += c;
    }
    EXPECT_EQ(total, 96u * 96u);
  }
}

TEST(Synth, OverlapAndInseparableStatsAreSpecErrors) {
  auto s = two_region_spec();
  s.regions[1].geometry = {oracle::rect(s.geo.origin_x + 16 * 80.0, s.geo.origin_y,
                                        s.geo.origin_x + 64 * 80.0, s.geo.origin_y - 64 * 80.0)};
  EXPECT_THROW(generate(s), ConfigError);
  auto t = two_region_spec();
  t.band_stats[1] = t.band_stats[0];
  t.band_stats[1].hh_mean += 1.0;
  EXPECT_THROW(generate(t), ConfigError);
}

TEST(Synth, IncidenceRampsWestToEast) {
  const auto out = generate(two_region_spec());
  EXPECT_NEAR(out.scene.incidence(10, 0), 19.0 + 28.0 * 0.5 / 64, 1e-4);
  EXPECT_NEAR(out.scene.incidence(10, 63), 19.0 + 28.0 * 63.5 / 64, 1e-4);
  EXPECT_EQ(out.scene.incidence(0, 5), out.scene.incidence(40, 5));
}

TEST(Synth, GaussianBayesClassifierSeparatesClasses) {
  const auto out = generate(banded_spec(1));
  std::size_t correct = 0, total = 0;
  for (std::size_t i = 0; i < out.truth.codes.size(); ++i) {
    const auto t = out.truth.codes.values()[i];
    if (t == kIgnoreLabel) continue;
    const double hh = out.scene.hh.values()[i], hv = out.scene.hv.values()[i];
    std::size_t best = 0;
    for (std::size_t k = 1; k < kNumClasses; ++k) {
      if (log_likelihood(kDefaultBandStats[k], hh, hv) > log_likelihood(kDefaultBandStats[best], hh, hv)) best = k;
    }
    correct += best == t;
    ++total;
  }
  EXPECT_GE(double(correct) / double(total), 0.99);
}

TEST(Synth, WrittenFilesReadBackThroughIngest) {
  const auto dir = oracle::temp_dir("synth_files");
  auto spec = banded_spec(2, 96);
  spec.scene_id = "2018-04";
  const auto out = generate(spec);
  write_synthetic_scene(dir, out);
  const auto scene = load_scene((dir / "2018-04_hh.tif").string(), (dir / "2018-04_hv.tif").string(),
                                (dir / "2018-04_ia.tif").string());
  EXPECT_EQ(scene.hh, out.scene.hh);
  EXPECT_EQ(scene.hv, out.scene.hv);
  EXPECT_EQ(scene.incidence, out.scene.incidence);
  const auto charts = read_charts((dir / "2018-04_chart.geojson").string());
  EXPECT_EQ(charts, out.charts);
  EXPECT_EQ(rasterize_labels(charts, scene).codes, out.truth.codes);
}

TEST(Synth, MonthlySpecsCoverTheYear) {
  const auto specs = monthly_specs(64, 64, 0);
  ASSERT_EQ(specs.size(), 12u);
  EXPECT_EQ(specs.front().scene_id, "2018-01");
  EXPECT_EQ(specs.back().scene_id, "2018-12");
  for (const auto& s : specs) EXPECT_EQ(s.regions.size(), kNumClasses);
}
