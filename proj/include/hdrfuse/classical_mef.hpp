#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hdrfuse/image.hpp"

namespace hdr {

/// Per-pixel, per-exposure fusion weights. weights[n] is an H x W plane for
/// exposure n; after normalization every pixel's weights sum to one.
struct WeightMap {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::vector<double>> weights;

  std::size_t exposures() const { return weights.size(); }
  double at(std::size_t n, std::size_t y, std::size_t x) const { return weights[n][y * width + x]; }
};

using PixelMap = std::vector<double>;

struct MefParams {
  double sigma_e = 0.2;
  std::size_t n_bins = 256;
  double eps_g = 1e-3;
  double eps_n = 1e-12;
};

enum class MefVariant { Combined, WellExposedOnly, HistogramOnly };

/// Gaussian preference around an exposure-adaptive center
/// c = clamp(1 - mean(img), 0.25, 0.75).
PixelMap wellexposedness_weight(const Image& gray, double sigma_e);

double adaptive_center(const Image& gray);

/// Inverse cumulative-histogram slope at each pixel's bin, rescaled so the
/// largest weight is 1. Crowded intensity bins (saturation) score low.
PixelMap histogram_gradient_weight(const Image& gray, std::size_t n_bins, double eps_g);

/// maps[n][k] is weight kind k for exposure n. Products over k are normalized
/// across n with eps_n added to every term.
WeightMap combine_weights(const std::vector<std::vector<PixelMap>>& maps, std::size_t height,
                          std::size_t width, double eps_n);

/// Weighted sum of the exposures, clamped to [0,1]. Weights are shared by all
/// color channels.
Image fuse(std::span<const Image> images, const WeightMap& wmap);

namespace reference {
/// Straight per-pixel loop over the same weighted sum, single-threaded.
Image fuse(std::span<const Image> images, const WeightMap& wmap);
}  // namespace reference

struct MefResult {
  Image fused;
  WeightMap weights;
};

MefResult adaptive_mef(std::span<const Image> exposures, const MefParams& params,
                       MefVariant variant = MefVariant::Combined);
MefResult adaptive_mef(const ExposurePair& pair, const MefParams& params,
                       MefVariant variant = MefVariant::Combined);

/// Grayscale view of one exposure's weight plane, for export.
Image weight_image(const WeightMap& wmap, std::size_t exposure);

}  // namespace hdr
