#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "seaice/losses.hpp"

using namespace seaice;

namespace {

constexpr int K = 5;

torch::Tensor random_targets(int b, int h, int w, double ignore_fraction, torch::Generator gen) {
  auto t = torch::randint(0, K, {b, h, w}, gen, torch::kLong);
  auto ignore = torch::rand({b, h, w}, gen) < ignore_fraction;
  return torch::where(ignore, torch::full_like(t, 255), t);
}

double value(const LossSpec& spec, const torch::Tensor& logits, const torch::Tensor& targets) {
  return loss_and_grad(logits, targets, spec).value.item<double>();
}

// Scalar reference values computed with explicit exp/log over an accessor.
struct ScalarOracle {
  torch::Tensor logits;   // [B, K, H, W] double
  torch::Tensor targets;  // [B, H, W]

  std::vector<double> softmax(int b, int y, int x) const {
    auto a = logits.accessor<double, 4>();
    double m = -INFINITY;
    for (int k = 0; k < K; ++k) m = std::max(m, a[b][k][y][x]);
    double z = 0;
    std::vector<double> p(K);
    for (int k = 0; k < K; ++k) z += p[k] = std::exp(a[b][k][y][x] - m);
    for (auto& v : p) v /= z;
    return p;
  }

  template <typename F>
  double mean_over_labeled(F per_pixel) const {
    auto t = targets.accessor<std::int64_t, 3>();
    double sum = 0;
    int n = 0;
    for (int b = 0; b < targets.size(0); ++b)
      for (int y = 0; y < targets.size(1); ++y)
        for (int x = 0; x < targets.size(2); ++x) {
          if (t[b][y][x] == 255) continue;
          sum += per_pixel(softmax(b, y, x)[t[b][y][x]]);
          ++n;
        }
    return n ? sum / n : 0.0;
  }

  double ce() const {
    return mean_over_labeled([](double pt) { return -std::log(pt); });
  }
  double focal(double gamma, double alpha) const {
    return mean_over_labeled([&](double pt) { return -alpha * std::pow(1 - pt, gamma) * std::log(pt); });
  }
  double dice(double s) const {
    auto t = targets.accessor<std::int64_t, 3>();
    std::vector<double> inter(K), psum(K), gsum(K);
    for (int b = 0; b < targets.size(0); ++b)
      for (int y = 0; y < targets.size(1); ++y)
        for (int x = 0; x < targets.size(2); ++x) {
          if (t[b][y][x] == 255) continue;
          const auto p = softmax(b, y, x);
          for (int k = 0; k < K; ++k) {
            const double g = t[b][y][x] == k;
            inter[k] += p[k] * g;
            psum[k] += p[k];
            gsum[k] += g;
          }
        }
    double acc = 0;
    int present = 0;
    for (int k = 0; k < K; ++k) {
      if (gsum[k] == 0) continue;
      acc += (2 * inter[k] + s) / (psum[k] + gsum[k] + s);
      ++present;
    }
    return present ? 1 - acc / present : 0.0;
  }
};

const LossSpec kCe{.kind = LossKind::CrossEntropy};
const LossSpec kDice{.kind = LossKind::Dice};
const LossSpec kFocal{.kind = LossKind::Focal};

}  // namespace

TEST(Losses, CrossEntropyAnalyticValues) {
  auto targets = torch::randint(0, K, {2, 3, 3}, torch::kLong);
  EXPECT_NEAR(value(kCe, torch::zeros({2, K, 3, 3}), targets), std::log(5.0), 1e-6);
  auto confident = torch::one_hot(targets, K).permute({0, 3, 1, 2}).to(torch::kFloat) * 1000.0;
  EXPECT_NEAR(value(kCe, confident, targets), 0.0, 1e-6);
}

TEST(Losses, FocalAtHalfProbability) {
  // Target logit ln 4 against four zeros gives p_t = 0.5.
  auto logits = torch::zeros({1, K, 1, 1}, torch::kDouble);
  logits[0][2][0][0] = std::log(4.0);
  auto targets = torch::full({1, 1, 1}, 2, torch::kLong);
  EXPECT_NEAR(value(kFocal, logits, targets), 0.25 * std::log(2.0), 1e-12);
}

TEST(Losses, MatchScalarOracleOnFixedBatch) {
  auto logits = torch::tensor({0.3, -1.2, 2.0, 0.7,  1.5, 0.1, -0.4, 0.0,  -2.0, 0.9, 1.1, 0.2,
                               0.0, 0.5, -0.3, 1.9,  0.8, -0.6, 0.4, -1.0},
                              torch::kDouble)
                    .view({1, K, 2, 2});
  auto targets = torch::tensor({1, 4, 0, 2}, torch::kLong).view({1, 2, 2});
  const ScalarOracle o{logits, targets};
  EXPECT_NEAR(value(kCe, logits, targets), o.ce(), 1e-12);
  EXPECT_NEAR(value(kFocal, logits, targets), o.focal(2.0, 1.0), 1e-12);
  EXPECT_NEAR(value(kDice, logits, targets), o.dice(1.0), 1e-12);
  auto partly_ignored = targets.clone();
  partly_ignored[0][1][0] = 255;
  const ScalarOracle q{logits, partly_ignored};
  EXPECT_NEAR(value(kCe, logits, partly_ignored), q.ce(), 1e-12);
  EXPECT_NEAR(value(kDice, logits, partly_ignored), q.dice(1.0), 1e-12);
}

TEST(Losses, MatchScalarOracleOnRandomBatches) {
  auto gen = at::detail::createCPUGenerator(5);
  for (int trial = 0; trial < 20; ++trial) {
    auto logits = torch::randn({2, K, 3, 4}, gen, torch::kDouble) * 3;
    auto targets = random_targets(2, 3, 4, 0.3, gen);
    const ScalarOracle o{logits, targets};
    EXPECT_NEAR(value(kCe, logits, targets), o.ce(), 1e-10);
    EXPECT_NEAR(value(LossSpec{.kind = LossKind::Focal, .focal_gamma = 1.5, .focal_alpha = 0.7}, logits, targets),
                o.focal(1.5, 0.7), 1e-10);
    EXPECT_NEAR(value(LossSpec{.kind = LossKind::Dice, .dice_smooth = 0.5}, logits, targets), o.dice(0.5), 1e-10);
  }
}

TEST(Losses, CrossEntropyAgreesWithTorchReference) {
  auto gen = at::detail::createCPUGenerator(6);
  auto logits = torch::randn({3, K, 8, 8}, gen, torch::kDouble).requires_grad_();
  auto targets = random_targets(3, 8, 8, 0.2, gen);
  auto ref = torch::nn::functional::cross_entropy(
      logits, targets, torch::nn::functional::CrossEntropyFuncOptions().ignore_index(255));
  auto ref_grad = torch::autograd::grad({ref}, {logits})[0];
  auto ours = loss_and_grad(logits.detach(), targets, kCe);
  EXPECT_NEAR(ours.value.item<double>(), ref.item<double>(), 1e-12);
  EXPECT_TRUE(torch::allclose(ours.grad, ref_grad, 1e-10, 1e-12));
}

TEST(Losses, FocalWithGammaZeroIsCrossEntropyBitForBit) {
  auto gen = at::detail::createCPUGenerator(7);
  const LossSpec focal0{.kind = LossKind::Focal, .focal_gamma = 0.0, .focal_alpha = 1.0};
  for (int trial = 0; trial < 100; ++trial) {
    auto logits = torch::randn({2, K, 6, 6}, gen) * 4;
    auto targets = random_targets(2, 6, 6, 0.1, gen);
    auto ce = loss_and_grad(logits, targets, kCe);
    auto fl = loss_and_grad(logits, targets, focal0);
    EXPECT_EQ(ce.value.item<float>(), fl.value.item<float>());
    EXPECT_TRUE(torch::equal(ce.grad, fl.grad));
  }
}

TEST(Losses, FocalNeverExceedsCrossEntropy) {
  auto gen = at::detail::createCPUGenerator(8);
  for (int trial = 0; trial < 50; ++trial) {
    auto logits = torch::randn({2, K, 5, 5}, gen, torch::kDouble) * 5;
    auto targets = random_targets(2, 5, 5, 0.1, gen);
    EXPECT_LE(value(kFocal, logits, targets), value(kCe, logits, targets));
  }
}

TEST(Losses, DiceClosedForms) {
  // Perfect, confident prediction.
  auto targets = torch::randint(0, K, {2, 8, 8}, torch::kLong);
  auto perfect = torch::one_hot(targets, K).permute({0, 3, 1, 2}).to(torch::kDouble) * 20.0;
  EXPECT_LT(value(kDice, perfect, targets), 1e-3);
  EXPECT_GE(value(kDice, perfect, targets), 0.0);

  // Uniform 1/K prediction on a single-class target of N = 16 pixels.
  const double n = 16, k = 5, s = 1;
  auto single = torch::full({1, 4, 4}, 3, torch::kLong);
  EXPECT_NEAR(value(kDice, torch::zeros({1, K, 4, 4}, torch::kDouble), single),
              1 - (2 * n / k + s) / (n / k + n + s), 1e-12);

  // No overlap: the target class receives (numerically) zero probability.
  auto wrong = torch::zeros({1, K, 4, 4}, torch::kDouble);
  wrong.select(1, 3).fill_(-800.0);
  const double psum = 0.0;
  EXPECT_NEAR(value(kDice, wrong, single), 1 - 1 / (psum + n + 1), 1e-12);
}

TEST(Losses, AnalyticGradientsMatchFiniteDifferences) {
  auto gen = at::detail::createCPUGenerator(9);
  const std::vector<LossSpec> specs = {kCe, kDice, kFocal,
                                       LossSpec{.kind = LossKind::Focal, .focal_gamma = 0.5, .focal_alpha = 0.25}};
  for (const auto& spec : specs) {
    for (int trial = 0; trial < 20; ++trial) {
      auto logits = torch::randn({2, K, 4, 4}, gen, torch::kDouble) * 2;
      auto targets = random_targets(2, 4, 4, 0.15, gen);
      const auto analytic = loss_and_grad(logits, targets, spec).grad;
      auto numeric = torch::zeros_like(logits);
      auto flat = logits.view({-1});
      auto out = numeric.view({-1});
      const double h = 1e-6;
      for (std::int64_t i = 0; i < flat.numel(); ++i) {
        const double x = flat[i].item<double>();
        flat[i] = x + h;
        const double up = value(spec, logits, targets);
        flat[i] = x - h;
        const double down = value(spec, logits, targets);
        flat[i] = x;
        out[i] = (up - down) / (2 * h);
      }
      const double err = (analytic - numeric).norm().item<double>() / numeric.norm().item<double>();
      EXPECT_LT(err, 1e-4) << to_string(spec.kind) << " trial " << trial;
    }
  }
}

TEST(Losses, IgnoredPixelsHaveNoInfluence) {
  auto gen = at::detail::createCPUGenerator(10);
  for (const auto& spec : {kCe, kDice, kFocal}) {
    for (int trial = 0; trial < 20; ++trial) {
      auto logits = torch::randn({2, K, 6, 6}, gen);
      auto targets = random_targets(2, 6, 6, 0.4, gen);
      auto ignored = (targets == 255).unsqueeze(1).expand_as(logits);
      auto perturbed = torch::where(ignored, logits + torch::randn(logits.sizes(), gen) * 50, logits);
      auto a = loss_and_grad(logits, targets, spec);
      auto b = loss_and_grad(perturbed, targets, spec);
      EXPECT_EQ(a.value.item<float>(), b.value.item<float>());
      EXPECT_TRUE(torch::equal(a.grad, b.grad));
      EXPECT_EQ(torch::where(ignored, a.grad, torch::zeros_like(a.grad)).abs().max().item<float>(), 0.0f);
    }
  }
}

TEST(Losses, AllIgnoredBatchIsZeroWithZeroGradient) {
  auto logits = torch::randn({1, K, 3, 3});
  auto targets = torch::full({1, 3, 3}, 255, torch::kLong);
  for (const auto& spec : {kCe, kDice, kFocal}) {
    auto r = loss_and_grad(logits, targets, spec);
    EXPECT_EQ(r.value.item<float>(), 0.0f);
    EXPECT_EQ(r.grad.abs().max().item<float>(), 0.0f);
  }
}

TEST(Losses, InvalidTargetCodesAreRejected) {
  auto logits = torch::zeros({1, K, 2, 2});
  auto targets = torch::tensor({0, 1, 7, 255}, torch::kLong).view({1, 2, 2});
  EXPECT_THROW(loss_and_grad(logits, targets, kCe), Error);
  EXPECT_THROW(loss_and_grad(logits, torch::zeros({1, 3, 2}, torch::kLong), kCe), Error);
}

TEST(Losses, PermutingClassesTogetherLeavesValuesUnchanged) {
  auto gen = at::detail::createCPUGenerator(11);
  for (int trial = 0; trial < 10; ++trial) {
    auto logits = torch::randn({2, K, 5, 5}, gen, torch::kDouble);
    auto targets = random_targets(2, 5, 5, 0.1, gen);
    auto perm = torch::randperm(K, gen, torch::kLong);  // new channel j holds old channel perm[j]
    auto inverse = torch::argsort(perm);
    auto permuted_logits = logits.index_select(1, perm);
    auto permuted_targets =
        torch::where(targets == 255, targets, inverse.index({targets.clamp(0, K - 1)}));
    for (const auto& spec : {kCe, kDice, kFocal}) {
      EXPECT_NEAR(value(spec, logits, targets), value(spec, permuted_logits, permuted_targets), 1e-12);
    }
  }
}

TEST(Losses, AutogradWrapperBackpropagatesClosedFormGradient) {
  auto gen = at::detail::createCPUGenerator(12);
  auto logits = torch::randn({2, K, 4, 4}, gen).requires_grad_();
  auto targets = random_targets(2, 4, 4, 0.2, gen);
  for (const auto& spec : {kCe, kDice, kFocal}) {
    if (logits.grad().defined()) logits.grad().zero_();
    auto loss = segmentation_loss(logits, targets, spec) * 3.0;
    loss.backward();
    auto expected = loss_and_grad(logits.detach(), targets, spec).grad * 3.0;
    EXPECT_TRUE(torch::allclose(logits.grad(), expected));
  }
  EXPECT_NEAR(ce_loss(torch::zeros({1, K, 2, 2}), torch::zeros({1, 2, 2}, torch::kLong)).item<double>(),
              std::log(5.0), 1e-6);
}
