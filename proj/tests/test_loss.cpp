#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "hdrfuse/loss.hpp"
#include "hdrfuse/nn/gradcheck.hpp"
#include "support.hpp"

using namespace hdr;

namespace {

ExposurePair random_pair(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  return ExposurePair(test::random_image(rng, h, w, 3, 0.0, 0.7), test::random_image(rng, h, w, 3, 0.3, 1.0));
}

double window_ssim(const Image& a, const std::vector<double>& f, std::size_t w, std::size_t c, std::size_t r0,
                   std::size_t c0, std::size_t n, double c1, double c2) {
  std::vector<double> pa, pb;
  for (std::size_t y = r0; y < r0 + n; ++y)
    for (std::size_t x = c0; x < c0 + n; ++x) {
      pa.push_back(a.at(y, x, c));
      pb.push_back(f[(y * w + x) * 3 + c]);
    }
  const double N = static_cast<double>(pa.size());
  const double ma = std::accumulate(pa.begin(), pa.end(), 0.0) / N, mb = std::accumulate(pb.begin(), pb.end(), 0.0) / N;
  double va = 0, vb = 0, cv = 0;
  for (std::size_t i = 0; i < pa.size(); ++i) {
    va += (pa[i] - ma) * (pa[i] - ma);
    vb += (pb[i] - mb) * (pb[i] - mb);
    cv += (pa[i] - ma) * (pb[i] - mb);
  }
  va /= N, vb /= N, cv /= N;
  return (2 * ma * mb + c1) * (2 * cv + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
}

// Scalar per-window reference of the weighted loss.
double oracle_loss(const ExposurePair& p, const std::vector<double>& f, const GammaMap& g, const LossConfig& lc) {
  const std::size_t w = p.under.width();
  const WindowGrid grid = WindowGrid::make(p.under.height(), w, lc.window);
  double acc = 0.0;
  for (std::size_t c = 0; c < 3; ++c)
    for (std::size_t r = 0; r < grid.rows; ++r)
      for (std::size_t k = 0; k < grid.cols; ++k) {
        const std::size_t idx = r * grid.cols + k;
        const double su = window_ssim(p.under, f, w, c, grid.anchor_row(r), grid.anchor_col(k), lc.window.window_size,
                                      lc.window.c1, lc.window.c2);
        const double so = window_ssim(p.over, f, w, c, grid.anchor_row(r), grid.anchor_col(k), lc.window.window_size,
                                      lc.window.c1, lc.window.c2);
        acc += g.under(idx) * su + g.over(idx) * so;
      }
  return 1.0 - acc / (3.0 * static_cast<double>(grid.count()));
}

std::vector<double> random_fused(std::mt19937_64& rng, std::size_t n) {
  std::vector<double> f(n);
  for (double& v : f) v = test::uniform01(rng);
  return f;
}

}  // namespace

TEST(WeightedSsimLoss, IdentityCases) {
  std::mt19937_64 rng(1);
  const Image img = test::random_image(rng, 14, 14, 3);
  const ExposurePair same(img, img);
  EXPECT_NEAR(weighted_ssim_loss(same, img, LossConfig{}).loss, 0.0, 1e-14);

  const ExposurePair pair = random_pair(rng, 14, 14);
  LossConfig lc;
  GammaMap ones = compute_gamma(pair, lc);
  std::fill(ones.under_values.begin(), ones.under_values.end(), 1.0);
  const auto r = weighted_ssim_loss(pair, pair.under.data(), ones, lc);
  EXPECT_NEAR(r.loss, 0.0, 1e-14);
}

TEST(WeightedSsimLoss, MatchesScalarReference) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 10; ++trial) {
    const ExposurePair pair = random_pair(rng, 16, 16);
    LossConfig lc;
    lc.window.stride = 1 + static_cast<std::size_t>(trial % 7);
    lc.gamma_kind = kAllAttributeKinds[static_cast<std::size_t>(trial) % kAllAttributeKinds.size()];
    const GammaMap g = compute_gamma(pair, lc);
    const auto f = random_fused(rng, 16 * 16 * 3);
    EXPECT_NEAR(weighted_ssim_loss(pair, f, g, lc).loss, oracle_loss(pair, f, g, lc), 1e-10);
  }
}

TEST(WeightedSsimLoss, GradientMatchesFiniteDifferences) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    std::mt19937_64 rng(100 + seed);
    const ExposurePair pair = random_pair(rng, 16, 16);
    LossConfig lc;
    lc.window.stride = seed % 2 ? 7 : 3;
    const GammaMap g = compute_gamma(pair, lc);
    auto f = random_fused(rng, 16 * 16 * 3);
    const auto r = weighted_ssim_loss(pair, f, g, lc);
    auto obj = [&] { return weighted_ssim_loss(pair, f, g, lc).loss; };
    EXPECT_LT(nn::gradient_check(obj, f, r.grad).max_rel_error, 1e-5) << seed;
  }
}

TEST(WeightedSsimLoss, BoundedAndSwapInvariant) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 30; ++trial) {
    const ExposurePair pair = random_pair(rng, 14, 21);
    LossConfig lc;
    const GammaMap g = compute_gamma(pair, lc);
    const auto f = random_fused(rng, 14 * 21 * 3);
    const double loss = weighted_ssim_loss(pair, f, g, lc).loss;
    EXPECT_GE(loss, 0.0);
    EXPECT_LE(loss, 2.0);

    ExposurePair swapped;
    swapped.under = pair.over;
    swapped.over = pair.under;
    GammaMap gs = g;
    for (double& v : gs.under_values) v = 1.0 - v;
    EXPECT_NEAR(weighted_ssim_loss(swapped, f, gs, lc).loss, loss, 1e-12);
  }
}

TEST(WeightedSsimLoss, Preconditions) {
  std::mt19937_64 rng(4);
  const ExposurePair pair = random_pair(rng, 14, 14);
  LossConfig lc;
  const GammaMap g = compute_gamma(pair, lc);
  EXPECT_THROW(weighted_ssim_loss(pair, std::vector<double>(10), g, lc), ContractError);
  EXPECT_THROW(weighted_ssim_loss(pair, Image(14, 14, 1, 0.5), lc), ContractError);
  LossConfig other = lc;
  other.window.stride = 1;
  EXPECT_THROW(weighted_ssim_loss(pair, pair.under.data(), g, other), ContractError);
}
