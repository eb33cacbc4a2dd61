#include "hdrfuse/classical_mef.hpp"

#include <algorithm>
#include <cmath>

namespace hdr {
namespace {

void require_gray(const Image& img, const char* what) {
  if (img.channels() != 1) throw ContractError(std::string(what) + " expects a single-channel image");
}

}  // namespace

double adaptive_center(const Image& gray) { return std::clamp(1.0 - gray.mean(), 0.25, 0.75); }

PixelMap wellexposedness_weight(const Image& gray, double sigma_e) {
  require_gray(gray, "wellexposedness_weight");
  const double center = adaptive_center(gray);
  const double denom = 2.0 * sigma_e * sigma_e;
  auto src = gray.data();
  PixelMap out(src.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(src.size()); ++i) {
    const double d = src[i] - center;
    out[i] = std::exp(-d * d / denom);
  }
  return out;
}

PixelMap histogram_gradient_weight(const Image& gray, std::size_t n_bins, double eps_g) {
  require_gray(gray, "histogram_gradient_weight");
  if (n_bins < 2) throw ContractError("histogram needs at least 2 bins");
  auto src = gray.data();
  auto bin_of = [n_bins](double s) {
    return std::min(static_cast<std::size_t>(s * static_cast<double>(n_bins)), n_bins - 1);
  };
  std::vector<double> density(n_bins, 0.0);
  for (double s : src) density[bin_of(s)] += 1.0;
  for (double& d : density) d /= static_cast<double>(src.size());

  // Slope of the cumulative histogram at bin b is the density h(b).
  std::vector<double> inv(n_bins);
  double peak = 0.0;
  for (std::size_t b = 0; b < n_bins; ++b) {
    inv[b] = 1.0 / (density[b] + eps_g);
    if (density[b] > 0.0) peak = std::max(peak, inv[b]);
  }
  PixelMap out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = inv[bin_of(src[i])] / peak;
  return out;
}

WeightMap combine_weights(const std::vector<std::vector<PixelMap>>& maps, std::size_t height,
                          std::size_t width, double eps_n) {
  if (maps.empty()) throw ContractError("combine_weights needs at least one exposure");
  const std::size_t n_px = height * width;
  for (const auto& kinds : maps) {
    if (kinds.empty()) throw ContractError("exposure without weight maps");
    for (const auto& m : kinds) {
      if (m.size() != n_px) throw ContractError("weight map dimension mismatch");
    }
  }
  WeightMap wm;
  wm.height = height;
  wm.width = width;
  wm.weights.assign(maps.size(), PixelMap(n_px));
  const std::size_t n_exp = maps.size();
#pragma omp parallel
  {
    std::vector<double> terms(n_exp);
#pragma omp for schedule(static)
    for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n_px); ++ii) {
      const auto i = static_cast<std::size_t>(ii);
      for (std::size_t n = 0; n < n_exp; ++n) {
        double w = 1.0;
        for (const auto& m : maps[n]) w *= m[i];
        w += eps_n;
        wm.weights[n][i] = w;
        terms[n] = w;
      }
      // Sorted summation keeps the normalizer independent of exposure order.
      std::sort(terms.begin(), terms.end());
      double total = 0.0;
      for (double t : terms) total += t;
      for (std::size_t n = 0; n < n_exp; ++n) wm.weights[n][i] /= total;
    }
  }
  return wm;
}

namespace {

void check_fuse_inputs(std::span<const Image> images, const WeightMap& wmap) {
  if (images.empty()) throw ContractError("fuse needs at least one image");
  if (images.size() != wmap.exposures()) {
    throw ContractError("image count does not match weight map exposures");
  }
  for (const auto& img : images) {
    if (!img.same_shape(images[0])) throw ContractError("fuse inputs differ in shape");
  }
  if (images[0].height() != wmap.height || images[0].width() != wmap.width) {
    throw ContractError("weight map size does not match images");
  }
}

}  // namespace

Image fuse(std::span<const Image> images, const WeightMap& wmap) {
  check_fuse_inputs(images, wmap);
  const Image& first = images[0];
  const std::size_t ch = first.channels();
  const std::size_t n_px = first.pixel_count();
  std::vector<double> out(n_px * ch, 0.0);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t ii = 0; ii < static_cast<std::ptrdiff_t>(n_px); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    for (std::size_t n = 0; n < images.size(); ++n) {
      const double w = wmap.weights[n][i];
      const double* src = images[n].data().data() + i * ch;
      for (std::size_t c = 0; c < ch; ++c) out[i * ch + c] += w * src[c];
    }
    for (std::size_t c = 0; c < ch; ++c) out[i * ch + c] = std::clamp(out[i * ch + c], 0.0, 1.0);
  }
  return Image(first.height(), first.width(), ch, std::move(out));
}

namespace reference {

Image fuse(std::span<const Image> images, const WeightMap& wmap) {
  check_fuse_inputs(images, wmap);
  const Image& first = images[0];
  Image out(first.height(), first.width(), first.channels());
  for (std::size_t y = 0; y < first.height(); ++y) {
    for (std::size_t x = 0; x < first.width(); ++x) {
      for (std::size_t c = 0; c < first.channels(); ++c) {
        double acc = 0.0;
        for (std::size_t n = 0; n < images.size(); ++n) acc += wmap.at(n, y, x) * images[n].at(y, x, c);
        out.at(y, x, c) = std::clamp(acc, 0.0, 1.0);
      }
    }
  }
  return out;
}

}  // namespace reference

MefResult adaptive_mef(std::span<const Image> exposures, const MefParams& params,
                       MefVariant variant) {
  if (exposures.empty()) throw ContractError("adaptive_mef needs at least one exposure");
  for (const auto& e : exposures) {
    if (!e.same_shape(exposures[0])) throw ContractError("exposures differ in shape");
  }
  std::vector<std::vector<PixelMap>> maps;
  maps.reserve(exposures.size());
  for (const auto& e : exposures) {
    const Image gray = to_grayscale(e);
    std::vector<PixelMap> kinds;
    if (variant != MefVariant::HistogramOnly) {
      kinds.push_back(wellexposedness_weight(gray, params.sigma_e));
    }
    if (variant != MefVariant::WellExposedOnly) {
      kinds.push_back(histogram_gradient_weight(gray, params.n_bins, params.eps_g));
    }
    maps.push_back(std::move(kinds));
  }
  MefResult result;
  result.weights = combine_weights(maps, exposures[0].height(), exposures[0].width(), params.eps_n);
  result.fused = fuse(exposures, result.weights);
  return result;
}

MefResult adaptive_mef(const ExposurePair& pair, const MefParams& params, MefVariant variant) {
  const Image stack[] = {pair.under, pair.over};
  return adaptive_mef(std::span<const Image>(stack), params, variant);
}

Image weight_image(const WeightMap& wmap, std::size_t exposure) {
  std::vector<double> data = wmap.weights.at(exposure);
  for (double& v : data) v = std::clamp(v, 0.0, 1.0);
  return Image(wmap.height, wmap.width, 1, std::move(data));
}

}  // namespace hdr
