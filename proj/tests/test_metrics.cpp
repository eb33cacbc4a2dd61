#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hdrfuse/metrics.hpp"
#include "support.hpp"

using namespace hdr;

namespace {

std::vector<double> random_patch(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> v(n);
  for (double& x : v) x = test::uniform01(rng);
  return v;
}

// Closed-form SSIM with population statistics, written out term by term.
double oracle_ssim(const std::vector<double>& a, const std::vector<double>& b, double c1, double c2) {
  const double n = static_cast<double>(a.size());
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double va = 0, vb = 0, cab = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    va += (a[i] - ma) * (a[i] - ma);
    vb += (b[i] - mb) * (b[i] - mb);
    cab += (a[i] - ma) * (b[i] - mb);
  }
  va /= n, vb /= n, cab /= n;
  return ((2 * ma * mb + c1) * (2 * cab + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

// Non-overlapping windows: reassemble each window's desired patch (max
// contrast, contrast^4-weighted structure) on top of the stack's mean.
Image desired_patch_fusion(const std::vector<Image>& stack, std::size_t win) {
  const std::size_t h = stack[0].height(), w = stack[0].width();
  Image out(h, w, 1);
  for (std::size_t r = 0; r + win <= h; r += win)
    for (std::size_t c = 0; c + win <= w; c += win) {
      const std::size_t n = win * win;
      std::vector<std::vector<double>> centered;
      std::vector<double> contrast;
      double mean_all = 0.0;
      for (const auto& img : stack) {
        std::vector<double> p;
        for (std::size_t y = r; y < r + win; ++y)
          for (std::size_t x = c; x < c + win; ++x) p.push_back(img.at(y, x));
        const double mu = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(n);
        mean_all += mu / static_cast<double>(stack.size());
        for (double& v : p) v -= mu;
        double norm = 0.0;
        for (double v : p) norm += v * v;
        contrast.push_back(std::sqrt(norm));
        centered.push_back(p);
      }
      const double cmax = *std::max_element(contrast.begin(), contrast.end());
      std::vector<double> s(n, 0.0);
      for (std::size_t k = 0; k < stack.size(); ++k) {
        if (contrast[k] == 0.0) continue;
        const double wk = std::pow(contrast[k], 4);
        for (std::size_t i = 0; i < n; ++i) s[i] += wk * centered[k][i] / contrast[k];
      }
      double sn = 0.0;
      for (double v : s) sn += v * v;
      sn = std::sqrt(sn);
      std::size_t i = 0;
      for (std::size_t y = r; y < r + win; ++y)
        for (std::size_t x = c; x < c + win; ++x, ++i)
          out.at(y, x) = std::clamp(mean_all + (sn > 0 ? cmax * s[i] / sn : 0.0), 0.0, 1.0);
    }
  return out;
}

}  // namespace

TEST(Ssim, ClosedFormCases) {
  const SsimWindowSpec spec{3, 1, 1e-4, 9e-4};
  const std::vector<double> zeros(9, 0.0), ones(9, 1.0);
  EXPECT_NEAR(ssim_window(zeros, ones, spec), 1e-4 / (1.0 + 1e-4), 1e-15);

  std::mt19937_64 rng(4);
  const auto a = random_patch(rng, 49);
  std::vector<double> b = a;
  for (double& v : b) v += 0.1;
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / 49.0, mb = ma + 0.1;
  const SsimWindowSpec s7{};
  EXPECT_NEAR(ssim_window(a, b, s7), (2 * ma * mb + s7.c1) / (ma * ma + mb * mb + s7.c1), 1e-12);
  EXPECT_THROW(ssim_window(a, zeros, s7), ContractError);
}

TEST(Ssim, MatchesOracleAndIsSymmetric) {
  std::mt19937_64 rng(8);
  const SsimWindowSpec spec{};
  for (int trial = 0; trial < 50; ++trial) {
    const auto a = random_patch(rng, 49), b = random_patch(rng, 49);
    const double s = ssim_window(a, b, spec);
    EXPECT_NEAR(s, oracle_ssim(a, b, spec.c1, spec.c2), 1e-12);
    EXPECT_NEAR(s, ssim_window(b, a, spec), 1e-12);
    EXPECT_GE(s, -1.0);
    EXPECT_LE(s, 1.0);
    EXPECT_DOUBLE_EQ(ssim_window(a, a, spec), 1.0);
  }
}

TEST(Ssim, WindowSpecValidation) {
  EXPECT_THROW((SsimWindowSpec{1, 1, 1e-4, 9e-4}.validate()), ContractError);
  EXPECT_THROW((SsimWindowSpec{7, 0, 1e-4, 9e-4}.validate()), ContractError);
  EXPECT_THROW((SsimWindowSpec{7, 1, 0.0, 9e-4}.validate()), ContractError);
  EXPECT_NO_THROW(mef_ssim_default_spec().validate());
  const WindowGrid g = WindowGrid::make(20, 15, SsimWindowSpec{7, 7, 1e-4, 9e-4});
  EXPECT_EQ(g.rows, 2u);
  EXPECT_EQ(g.cols, 2u);
  EXPECT_THROW(WindowGrid::make(5, 15, SsimWindowSpec{}), ContractError);
}

TEST(Ssim, MapMatchesPerWindowOracle) {
  std::mt19937_64 rng(12);
  const Image a = test::random_image(rng, 13, 11, 1), b = test::random_image(rng, 13, 11, 1);
  const SsimWindowSpec spec{5, 2, 1e-4, 9e-4};
  const auto map = ssim_map(a.data(), b.data(), 13, 11, spec);
  const WindowGrid g = WindowGrid::make(13, 11, spec);
  ASSERT_EQ(map.size(), g.count());
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t c = 0; c < g.cols; ++c) {
      std::vector<double> pa, pb;
      for (std::size_t y = 0; y < 5; ++y)
        for (std::size_t x = 0; x < 5; ++x) {
          pa.push_back(a.at(g.anchor_row(r) + y, g.anchor_col(c) + x));
          pb.push_back(b.at(g.anchor_row(r) + y, g.anchor_col(c) + x));
        }
      EXPECT_NEAR(map[r * g.cols + c], oracle_ssim(pa, pb, spec.c1, spec.c2), 1e-12);
    }
}

TEST(MefSsim, SelfIdentity) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Image img = test::random_image(rng, 16, 16, 1);
    const Image stack[] = {img, img};
    EXPECT_NEAR(mef_ssim(stack, img).global_score, 1.0, 1e-9);
  }
}

TEST(MefSsim, ConstantFusionScoresNearZero) {
  std::mt19937_64 rng(32);
  const Image stack[] = {test::random_image(rng, 32, 32, 1), test::random_image(rng, 32, 32, 1)};
  const Image flat(32, 32, 1, 0.5);
  const double s = reference::mef_ssim(stack, flat).global_score;
  EXPECT_LT(s, 0.2);
  EXPECT_GE(s, 0.0);
}

TEST(MefSsim, ParallelMatchesReference) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 2 + trial % 3;
    std::vector<Image> stack;
    for (std::size_t i = 0; i < n; ++i) stack.push_back(test::random_image(rng, 14, 17, 1));
    const Image fused = test::random_image(rng, 14, 17, 1);
    const SsimWindowSpec spec{trial % 2 ? 8u : 5u, 1 + static_cast<std::size_t>(trial % 3), 1e-4, 9e-4};
    const auto fast = mef_ssim(stack, fused, spec);
    const auto slow = reference::mef_ssim(stack, fused, spec);
    ASSERT_EQ(fast.per_patch_scores.size(), slow.per_patch_scores.size());
    for (std::size_t i = 0; i < fast.per_patch_scores.size(); ++i)
      EXPECT_NEAR(fast.per_patch_scores[i], slow.per_patch_scores[i], 1e-12);
    EXPECT_NEAR(fast.global_score, slow.global_score, 1e-12);
    const double mean = std::accumulate(fast.per_patch_scores.begin(), fast.per_patch_scores.end(), 0.0) /
                        static_cast<double>(fast.per_patch_scores.size());
    EXPECT_NEAR(fast.global_score, mean, 1e-12);
  }
}

TEST(MefSsim, OrderInvariant) {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Image> stack{test::random_image(rng, 12, 12, 1), test::random_image(rng, 12, 12, 1),
                             test::random_image(rng, 12, 12, 1)};
    const Image fused = test::random_image(rng, 12, 12, 1);
    const double base = mef_ssim(stack, fused).global_score;
    std::sort(stack.begin(), stack.end(), [](const Image& a, const Image& b) { return a.mean() < b.mean(); });
    do {
      EXPECT_NEAR(mef_ssim(stack, fused).global_score, base, 1e-12);
    } while (std::next_permutation(stack.begin(), stack.end(),
                                   [](const Image& a, const Image& b) { return a.mean() < b.mean(); }));
  }
}

TEST(MefSsim, DesiredPatchFusionDominates) {
  std::mt19937_64 rng(6);
  const SsimWindowSpec spec{8, 8, 1e-4, 9e-4};
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Image> stack{test::random_image(rng, 32, 32, 1, 0.3, 0.7), test::random_image(rng, 32, 32, 1, 0.3, 0.7)};
    const double best = mef_ssim(stack, desired_patch_fusion(stack, 8), spec).global_score;
    EXPECT_NEAR(best, 1.0, 1e-6);
    for (int k = 0; k < 5; ++k) {
      const Image other = test::random_image(rng, 32, 32, 1);
      EXPECT_GE(best, mef_ssim(stack, other, spec).global_score);
    }
    EXPECT_GE(best, mef_ssim(stack, stack[0], spec).global_score);
  }
}

TEST(MefSsim, Preconditions) {
  const Image a(10, 10, 1, 0.5), b(10, 10, 3, 0.5), c(9, 10, 1, 0.5);
  const Image one[] = {a};
  EXPECT_THROW(mef_ssim(one, a), ContractError);
  const Image mixed[] = {a, c};
  EXPECT_THROW(mef_ssim(mixed, a), ContractError);
  const Image color[] = {b, b};
  EXPECT_THROW(mef_ssim(color, b), ContractError);
  EXPECT_NEAR(mef_ssim_score(color, b), 1.0, 1e-9);
}

TEST(MefSsim, HeatmapMapsScoreRange) {
  MefSsimReport r;
  r.grid.rows = 1;
  r.grid.cols = 3;
  r.per_patch_scores = {-1.0, 0.0, 1.0};
  const Image h = score_heatmap(r);
  EXPECT_EQ(h.at(0, 0), 0.0);
  EXPECT_EQ(h.at(0, 1), 0.5);
  EXPECT_EQ(h.at(0, 2), 1.0);
}
