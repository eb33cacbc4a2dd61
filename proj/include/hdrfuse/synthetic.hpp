#pragma once

#include <cstdint>

#include "hdrfuse/image.hpp"
#include "hdrfuse/trainer.hpp"

namespace hdr {

struct SyntheticSceneSpec {
  std::size_t height = 64;
  std::size_t width = 64;
  std::uint64_t seed = 1;
  double illum_min = 0.03;  // left edge of the illumination ramp
  double illum_max = 3.0;   // right edge
  // 0 gives a log-linear ramp; larger values approach a dark/bright step.
  double ramp_sharpness = 0.0;
  double under_gain = 0.5;
  double over_gain = 4.0;
  double display_gamma = 2.2;
};

/// Textured scene under a left-to-right illumination ramp spanning two
/// decades, captured at two gains with clipping, display gamma and 8-bit
/// quantization. Deterministic in the seed.
ExposurePair make_synthetic_pair(const SyntheticSceneSpec& spec);

Scene make_synthetic_scene(const SyntheticSceneSpec& spec, std::string name);

}  // namespace hdr
