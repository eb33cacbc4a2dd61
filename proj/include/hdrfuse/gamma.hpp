#pragma once

#include <array>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "hdrfuse/image.hpp"
#include "hdrfuse/metrics.hpp"

namespace hdr {

enum class AttributeKind { Variance, Gradient, WellExposedness, VarGrad, GradWell, VarWell };

inline constexpr std::array<AttributeKind, 6> kAllAttributeKinds = {
    AttributeKind::Variance,  AttributeKind::Gradient, AttributeKind::WellExposedness,
    AttributeKind::VarGrad,   AttributeKind::GradWell, AttributeKind::VarWell};

/// CLI spelling: variance, gradient, wellexp, var-grad, grad-well, var-well.
std::string_view attribute_name(AttributeKind kind);
std::optional<AttributeKind> parse_attribute(std::string_view name);

/// One value per window of a WindowGrid, row-major.
struct WindowMap {
  WindowGrid grid;
  std::vector<double> values;
};

/// Blending coefficient of the under-exposed image per loss window. The
/// over-exposed coefficient is always 1 - under(w).
struct GammaMap {
  WindowGrid grid;
  std::vector<double> under_values;

  double under(std::size_t w) const { return under_values[w]; }
  double over(std::size_t w) const { return 1.0 - under_values[w]; }
};

inline constexpr double kGammaFloor = 1e-4;

/// Population variance inside each window.
WindowMap local_variance(const Image& gray, const SsimWindowSpec& window);

/// Window mean of the central-difference gradient magnitude (borders replicated).
WindowMap local_gradient(const Image& gray, const SsimWindowSpec& window);

/// Window mean of exp(-(I - 0.5)^2 / (2 sigma_e^2)).
WindowMap local_wellexposedness(const Image& gray, const SsimWindowSpec& window, double sigma_e);

/// a*b / sqrt(a^2 + b^2), zero where both vanish.
WindowMap hybrid_attribute(const WindowMap& a, const WindowMap& b);

/// Attribute map of the requested kind for one exposure.
WindowMap attribute_map(const Image& gray, AttributeKind kind, const SsimWindowSpec& window,
                        double sigma_e);

/// g(u) / (g(u) + g(o)) with g(x) = max(x, floor).
GammaMap gamma_from_attributes(const WindowMap& attr_under, const WindowMap& attr_over,
                               double floor = kGammaFloor);

/// Attribute maps of both exposures rescaled by their joint maximum, as
/// grayscale images at window-grid resolution.
std::pair<Image, Image> render_attribute_maps(const ExposurePair& pair, AttributeKind kind,
                                              const SsimWindowSpec& window, double sigma_e = 0.2);

}  // namespace hdr
