#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hdrfuse/image.hpp"

namespace hdr {

/// Square box window geometry and SSIM stabilization constants on the [0,1]
/// intensity scale.
struct SsimWindowSpec {
  std::size_t window_size = 7;
  std::size_t stride = 1;
  double c1 = 0.01 * 0.01;
  double c2 = 0.03 * 0.03;

  void validate() const;
};

/// Window defaults used for MEF-SSIM scoring.
inline SsimWindowSpec mef_ssim_default_spec() { return {8, 1, 0.01 * 0.01, 0.03 * 0.03}; }

/// Top-left anchors of every window that fits entirely in an H x W plane.
struct WindowGrid {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t window = 0;
  std::size_t stride = 0;

  static WindowGrid make(std::size_t height, std::size_t width, const SsimWindowSpec& spec);
  std::size_t count() const { return rows * cols; }
  std::size_t anchor_row(std::size_t r) const { return r * stride; }
  std::size_t anchor_col(std::size_t c) const { return c * stride; }
  friend bool operator==(const WindowGrid&, const WindowGrid&) = default;
};

/// Box-window SSIM of two equally sized patches (population statistics).
double ssim_window(std::span<const double> a, std::span<const double> b, const SsimWindowSpec& spec);

/// First and second moments of one window pair; shared by the loss.
struct WindowStats {
  double mu_a = 0, mu_b = 0, var_a = 0, var_b = 0, cov = 0;
};
WindowStats window_stats(std::span<const double> a, std::span<const double> b);
double ssim_from_stats(const WindowStats& s, double c1, double c2);

/// SSIM of every window on the grid, row-major over anchors.
std::vector<double> ssim_map(std::span<const double> a, std::span<const double> b, std::size_t height,
                             std::size_t width, const SsimWindowSpec& spec);

struct MefSsimReport {
  double global_score = 0.0;
  WindowGrid grid;
  std::vector<double> per_patch_scores;  // row-major over grid anchors
};

inline constexpr double kMefSsimContrastExponent = 4.0;

/// Structural fidelity of a fused image against its exposure stack. Each
/// window's reference patch takes the largest input contrast and the
/// contrast-weighted (power p) average structure; luminance is ignored.
MefSsimReport mef_ssim(std::span<const Image> stack, const Image& fused,
                       const SsimWindowSpec& spec = mef_ssim_default_spec(),
                       double contrast_exponent = kMefSsimContrastExponent);

/// Convenience overload: converts color inputs to grayscale first.
double mef_ssim_score(std::span<const Image> stack, const Image& fused,
                      const SsimWindowSpec& spec = mef_ssim_default_spec());

namespace reference {
/// Direct single-threaded evaluation of every window, kept as the test oracle
/// for the parallel path.
MefSsimReport mef_ssim(std::span<const Image> stack, const Image& fused,
                       const SsimWindowSpec& spec = mef_ssim_default_spec(),
                       double contrast_exponent = kMefSsimContrastExponent);
}  // namespace reference

/// Heatmap of per-window scores, mapping [-1,1] to [0,1], at grid resolution.
Image score_heatmap(const MefSsimReport& report);

}  // namespace hdr
