#include "hdrfuse/synthetic.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace hdr {
namespace {

double uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo + (hi - lo) * static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace

ExposurePair make_synthetic_pair(const SyntheticSceneSpec& spec) {
  std::mt19937_64 rng(spec.seed);
  const std::size_t h = spec.height, w = spec.width;

  struct Wave { double fx, fy, phase, amp; };
  std::vector<Wave> waves;
  for (int i = 0; i < 4; ++i) {
    waves.push_back({uniform(rng, 0.05, 0.6), uniform(rng, 0.05, 0.6), uniform(rng, 0, 2 * std::numbers::pi),
                     uniform(rng, 0.3, 1.0)});
  }
  struct Disc { double cy, cx, r, level; };
  std::vector<Disc> discs;
  for (int i = 0; i < 6; ++i) {
    discs.push_back({uniform(rng, 0, static_cast<double>(h)), uniform(rng, 0, static_cast<double>(w)),
                     uniform(rng, 3.0, 0.25 * static_cast<double>(std::min(h, w)) + 3.0), uniform(rng, 0.1, 1.0)});
  }
  double tint[3];
  for (double& t : tint) t = uniform(rng, 0.7, 1.0);
  const double illum_lo = std::log(spec.illum_min), illum_hi = std::log(spec.illum_max);
  const double vertical = uniform(rng, -0.5, 0.5);

  // Logistic profile rescaled to pass through 0 and 1 at the image edges.
  const double k = spec.ramp_sharpness;
  auto logistic = [k](double t) { return 1.0 / (1.0 + std::exp(-k * (t - 0.5))); };
  auto profile = [&](double t) {
    if (k <= 0.0) return t;
    return (logistic(t) - logistic(0.0)) / (logistic(1.0) - logistic(0.0));
  };

  std::vector<double> radiance(h * w * 3);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double u = static_cast<double>(x) / static_cast<double>(std::max<std::size_t>(w - 1, 1));
      const double v = static_cast<double>(y) / static_cast<double>(std::max<std::size_t>(h - 1, 1));
      const double illum = std::exp(illum_lo + (illum_hi - illum_lo) * profile(u) + vertical * (v - 0.5));
      double tex = 0.0, amp = 0.0;
      for (const auto& wv : waves) {
        tex += wv.amp * std::sin(wv.fx * static_cast<double>(x) + wv.fy * static_cast<double>(y) + wv.phase);
        amp += wv.amp;
      }
      double refl = 0.55 + 0.3 * tex / amp;
      for (const auto& d : discs) {
        const double dy = static_cast<double>(y) - d.cy, dx = static_cast<double>(x) - d.cx;
        if (dy * dy + dx * dx < d.r * d.r) refl = 0.5 * refl + 0.5 * d.level;
      }
      for (std::size_t c = 0; c < 3; ++c) radiance[(y * w + x) * 3 + c] = illum * refl * tint[c];
    }
  }

  auto capture = [&](double gain) {
    std::vector<double> data(radiance.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      const double linear = std::clamp(gain * radiance[i], 0.0, 1.0);
      data[i] = std::round(std::pow(linear, 1.0 / spec.display_gamma) * 255.0) / 255.0;
    }
    return Image(h, w, 3, std::move(data));
  };
  return ExposurePair(capture(spec.under_gain), capture(spec.over_gain));
}

Scene make_synthetic_scene(const SyntheticSceneSpec& spec, std::string name) {
  const ExposurePair p = make_synthetic_pair(spec);
  return Scene{std::move(name), {p.under, p.over}};
}

}  // namespace hdr
