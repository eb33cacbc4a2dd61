#pragma once

#include <span>
#include <vector>

#include "hdrfuse/gamma.hpp"
#include "hdrfuse/image.hpp"
#include "hdrfuse/metrics.hpp"

namespace hdr {

struct LossConfig {
  AttributeKind gamma_kind = AttributeKind::VarGrad;
  SsimWindowSpec window{7, 7, 0.01 * 0.01, 0.03 * 0.03};
  double sigma_e = 0.2;
  double gamma_floor = kGammaFloor;
};

/// γ map of a pair, computed on the grayscale exposures.
GammaMap compute_gamma(const ExposurePair& pair, const LossConfig& cfg);

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // dL/dfused, interleaved like Image data
};

/// 1 - mean over channels and windows of
///   γ_w * ssim(under_c, fused_c; w) + (1 - γ_w) * ssim(over_c, fused_c; w).
/// γ is a constant of the inputs; the gradient is taken w.r.t. fused only.
/// `fused` is interleaved H x W x C and need not lie in [0,1].
LossResult weighted_ssim_loss(const ExposurePair& pair, std::span<const double> fused, const GammaMap& gamma,
                              const LossConfig& cfg);
LossResult weighted_ssim_loss(const ExposurePair& pair, const Image& fused, const LossConfig& cfg);

}  // namespace hdr
