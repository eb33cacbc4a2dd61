#include <gtest/gtest.h>

#include <cmath>

#include "hdrfuse/loss.hpp"
#include "hdrfuse/model.hpp"
#include "hdrfuse/nn/gradcheck.hpp"
#include "hdrfuse/trainer.hpp"
#include "support.hpp"

using namespace hdr;

namespace {

ExposurePair random_pair(std::mt19937_64& rng, std::size_t h, std::size_t w) {
  return ExposurePair(test::random_image(rng, h, w, 3, 0.0, 0.6), test::random_image(rng, h, w, 3, 0.4, 1.0));
}

template <typename T>
ModelParams<T> calibrated_model(std::uint64_t seed, const std::vector<ExposurePair>& data, double width = 1.0 / 16) {
  ModelConfig cfg;
  cfg.width_multiplier = width;
  auto m = build_model<T>(cfg, seed);
  calibrate_batchnorm(m, data);
  return m;
}

}  // namespace

TEST(ModelConfig, ChannelSequences) {
  ModelConfig full;
  full.width_multiplier = 1.0;
  EXPECT_EQ(full.encoder_channels(), (std::vector<std::size_t>{64, 64, 128, 128, 256, 256, 256, 512, 512, 512}));
  EXPECT_EQ(full.decoder_channels(), (std::vector<std::size_t>{512, 512, 512, 256, 256, 256, 128, 128, 64, 64}));
  ModelConfig small;
  EXPECT_EQ(small.encoder_channels(), (std::vector<std::size_t>{4, 4, 8, 8, 16, 16, 16, 32, 32, 32}));
  EXPECT_EQ(scale_channels(64, 1.0 / 128), 1u);
  EXPECT_EQ(scale_channels(64, 1e-6), 1u);
  ModelConfig bad;
  bad.width_multiplier = 1.5;
  EXPECT_THROW(bad.validate(), ContractError);
}

TEST(Model, BuildIsDeterministicInSeed) {
  const auto a = build_model<float>(ModelConfig{}, 4), b = build_model<float>(ModelConfig{}, 4),
             c = build_model<float>(ModelConfig{}, 5);
  const auto ta = a.named_tensors(), tb = b.named_tensors(), tc = c.named_tensors();
  ASSERT_EQ(ta.size(), tb.size());
  bool differs = false;
  for (std::size_t i = 0; i < ta.size(); ++i) {
    EXPECT_EQ(ta[i].first, tb[i].first);
    ASSERT_EQ(ta[i].second->shape(), tb[i].second->shape());
    for (std::size_t k = 0; k < ta[i].second->size(); ++k) {
      EXPECT_EQ((*ta[i].second)[k], (*tb[i].second)[k]);
      differs = differs || (*ta[i].second)[k] != (*tc[i].second)[k];
    }
  }
  EXPECT_TRUE(differs);
  EXPECT_EQ(ta.front().first, "enc0.conv.kernel");
  EXPECT_EQ(ta.back().first, "head.conv.bias");
  EXPECT_EQ(ta.size(), 20u * 6 + 2);
}

TEST(Model, ArchitectureAndShapes) {
  const auto m = build_model<float>(ModelConfig{}, 1);
  const auto arch = m.architecture();
  std::size_t pools = 0, ups = 0;
  for (const auto& l : arch) {
    pools += l.kind == nn::LayerKind::MaxPool2;
    ups += l.kind == nn::LayerKind::Upsample2;
  }
  EXPECT_EQ(pools, kPoolCount);
  EXPECT_EQ(ups, kPoolCount);
  EXPECT_EQ(arch.back().kind, nn::LayerKind::Softmax);

  auto mm = m;
  std::mt19937_64 rng(2);
  for (std::size_t side : {16u, 32u, 48u}) {
    nn::Tensor<float> in({2, 2, side, 32});
    for (float& v : in.values()) v = static_cast<float>(test::uniform01(rng));
    const auto out = model_forward(mm, in, nn::BatchNormMode::Training);
    EXPECT_EQ(out.shape(), in.shape());
  }
  EXPECT_THROW(model_forward(mm, nn::Tensor<float>({1, 2, 20, 32}), nn::BatchNormMode::Training), ContractError);
}

TEST(Model, InferenceNeedsCalibratedStatistics) {
  std::mt19937_64 rng(3);
  const auto pair = random_pair(rng, 16, 16);
  const auto fresh = build_model<float>(ModelConfig{}, 1);
  EXPECT_THROW(predict_weights(fresh, pair), ContractError);
  const auto ready = calibrated_model<float>(1, {pair});
  EXPECT_NO_THROW(predict_weights(ready, pair));
}

TEST(Model, PadsAndCropsNonMultipleInputs) {
  std::mt19937_64 rng(4);
  const auto pair = random_pair(rng, 48, 32), odd = random_pair(rng, 21, 37);
  const auto m = calibrated_model<float>(2, {pair});
  const WeightMap w = predict_weights(m, pair);
  EXPECT_EQ(w.height, 48u);
  EXPECT_EQ(w.width, 32u);
  const WeightMap wo = predict_weights(m, odd);
  EXPECT_EQ(wo.height, 21u);
  EXPECT_EQ(wo.width, 37u);
  const auto in = make_model_input<float>(to_grayscale(odd.under), to_grayscale(odd.over));
  EXPECT_EQ(in.shape(), (nn::Shape{1, 2, 32, 48}));
}

TEST(Model, WeightsAreNormalizedAndDeterministic) {
  std::mt19937_64 rng(5);
  std::vector<ExposurePair> data;
  for (int i = 0; i < 4; ++i) data.push_back(random_pair(rng, 16, 16));
  const auto m = calibrated_model<float>(9, data);
  for (int trial = 0; trial < 50; ++trial) {
    const auto pair = random_pair(rng, 16, 16);
    const WeightMap w = predict_weights(m, pair);
    for (std::size_t i = 0; i < 256; ++i) {
      EXPECT_GT(w.weights[0][i], 0.0);
      EXPECT_NEAR(w.weights[0][i] + w.weights[1][i], 1.0, 1e-6);
    }
    if (trial < 3) {
      const WeightMap again = predict_weights(m, pair);
      EXPECT_EQ(again.weights, w.weights);
    }
  }
}

TEST(Model, SelectorHeadReproducesUnderExposure) {
  std::mt19937_64 rng(6);
  const auto pair = random_pair(rng, 16, 16);
  auto m = calibrated_model<double>(3, {pair});
  m.head.kernel.fill(0.0);
  m.head.bias[0] = 200.0;
  m.head.bias[1] = -200.0;
  EXPECT_EQ(fuse_learned(m, pair), pair.under);
}

TEST(Model, FuseLearnedMatchesPerPixelOracle) {
  std::mt19937_64 rng(7);
  const auto mf = calibrated_model<float>(4, {random_pair(rng, 16, 16)});
  const auto md = calibrated_model<double>(4, {random_pair(rng, 16, 16)});
  for (int trial = 0; trial < 10; ++trial) {
    const auto pair = random_pair(rng, 16, 16);
    for (int precision = 0; precision < 2; ++precision) {
      const WeightMap w = precision ? predict_weights(md, pair) : predict_weights(mf, pair);
      const Image f = precision ? fuse_learned(md, pair) : fuse_learned(mf, pair);
      const double tol = precision ? 1e-12 : 1e-6;
      for (std::size_t y = 0; y < 16; ++y)
        for (std::size_t x = 0; x < 16; ++x)
          for (std::size_t c = 0; c < 3; ++c) {
            const double u = pair.under.at(y, x, c), o = pair.over.at(y, x, c);
            const double expect = w.weights[0][y * 16 + x] * u + w.weights[1][y * 16 + x] * o;
            EXPECT_NEAR(f.at(y, x, c), expect, tol);
            EXPECT_GE(f.at(y, x, c), std::min(u, o) - 1e-12);
            EXPECT_LE(f.at(y, x, c), std::max(u, o) + 1e-12);
          }
    }
  }
}

TEST(Model, EndToEndLossGradientMatchesFiniteDifferences) {
  std::mt19937_64 rng(8);
  const auto pair = random_pair(rng, 16, 16);
  LossConfig lc;
  const GammaMap gamma = compute_gamma(pair, lc);
  ModelConfig cfg;
  cfg.width_multiplier = 1.0 / 32;
  auto m = build_model<double>(cfg, 11);
  const auto input = make_model_input<double>(to_grayscale(pair.under), to_grayscale(pair.over));

  auto objective = [&] {
    auto copy = m;
    const auto w = model_forward(copy, input, nn::BatchNormMode::Training);
    return weight_map_loss(pair, gamma, lc, w, 0);
  };
  ForwardTrace<double> trace;
  const auto w = model_forward(m, input, nn::BatchNormMode::Training, &trace);
  nn::Tensor<double> gw(w.shape());
  weight_map_loss(pair, gamma, lc, w, 0, &gw, 1.0);
  m.zero_grad();
  model_backward(m, trace, gw);

  for (auto* t : {&m.blocks.front().conv.kernel, &m.blocks[10].bn.scale, &m.head.kernel, &m.head.bias}) {
    const std::vector<double> analytic(t->grad().begin(), t->grad().end());
    const auto r = nn::gradient_check(objective, t->values(), analytic, 1e-6);
    EXPECT_LT(r.max_rel_error, 1e-4) << r.worst_index;
  }
}
