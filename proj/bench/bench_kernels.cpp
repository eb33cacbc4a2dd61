#include <benchmark/benchmark.h>

#include <random>

#include "hdrfuse/classical_mef.hpp"
#include "hdrfuse/metrics.hpp"
#include "hdrfuse/nn/layers.hpp"

namespace {

using namespace hdr;

std::mt19937_64& rng() {
  static std::mt19937_64 r(42);
  return r;
}

double u01() { return static_cast<double>(rng()() >> 11) * 0x1.0p-53; }

nn::Tensor<float> random_tensor(nn::Shape shape) {
  nn::Tensor<float> t(std::move(shape));
  for (auto& v : t.values()) v = static_cast<float>(u01() * 2.0 - 1.0);
  return t;
}

Image random_image(std::size_t h, std::size_t w, std::size_t c) {
  Image img(h, w, c);
  for (double& v : img.storage()) v = u01();
  return img;
}

// Arg: spatial size. 16 -> 16 channels, matching a mid-level block of the
// 1/16-width network.
void BM_Conv2dForward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({2, 16, n, n});
  const auto k = random_tensor({16, 16, 3, 3});
  const auto b = random_tensor({16});
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_forward(x, k, b));
}

void BM_Conv2dForwardReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({2, 16, n, n});
  const auto k = random_tensor({16, 16, 3, 3});
  const auto b = random_tensor({16});
  for (auto _ : state) benchmark::DoNotOptimize(nn::reference::conv2d_forward(x, k, b));
}

void BM_Conv2dBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({2, 16, n, n});
  const auto k = random_tensor({16, 16, 3, 3});
  const auto g = random_tensor({2, 16, n, n});
  for (auto _ : state) benchmark::DoNotOptimize(nn::conv2d_backward(x, k, g));
}

void BM_Conv2dBackwardReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_tensor({2, 16, n, n});
  const auto k = random_tensor({16, 16, 3, 3});
  const auto g = random_tensor({2, 16, n, n});
  for (auto _ : state) benchmark::DoNotOptimize(nn::reference::conv2d_backward(x, k, g));
}

void BM_MefSsim(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<Image> stack{random_image(n, n, 1), random_image(n, n, 1)};
  const Image fused = random_image(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(mef_ssim(stack, fused));
}

void BM_MefSsimReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<Image> stack{random_image(n, n, 1), random_image(n, n, 1)};
  const Image fused = random_image(n, n, 1);
  for (auto _ : state) benchmark::DoNotOptimize(reference::mef_ssim(stack, fused));
}

WeightMap half_weights(std::size_t n) {
  return {n, n, {std::vector<double>(n * n, 0.5), std::vector<double>(n * n, 0.5)}};
}

void BM_Fuse(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<Image> stack{random_image(n, n, 3), random_image(n, n, 3)};
  const WeightMap w = half_weights(n);
  for (auto _ : state) benchmark::DoNotOptimize(fuse(stack, w));
}

void BM_FuseReference(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::vector<Image> stack{random_image(n, n, 3), random_image(n, n, 3)};
  const WeightMap w = half_weights(n);
  for (auto _ : state) benchmark::DoNotOptimize(reference::fuse(stack, w));
}

}  // namespace

BENCHMARK(BM_Conv2dForward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dForwardReference)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dBackward)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Conv2dBackwardReference)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MefSsim)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MefSsimReference)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Fuse)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FuseReference)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
