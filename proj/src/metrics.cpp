#include "hdrfuse/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace hdr {

void SsimWindowSpec::validate() const {
  if (window_size < 2) throw ContractError("SSIM window must be at least 2 pixels");
  if (stride < 1) throw ContractError("SSIM window stride must be >= 1");
  if (!(c1 > 0.0) || !(c2 > 0.0)) throw ContractError("SSIM constants must be positive");
}

WindowGrid WindowGrid::make(std::size_t height, std::size_t width, const SsimWindowSpec& spec) {
  spec.validate();
  if (spec.window_size > height || spec.window_size > width) {
    throw ContractError("SSIM window larger than image");
  }
  WindowGrid g;
  g.window = spec.window_size;
  g.stride = spec.stride;
  g.rows = (height - spec.window_size) / spec.stride + 1;
  g.cols = (width - spec.window_size) / spec.stride + 1;
  return g;
}

WindowStats window_stats(std::span<const double> a, std::span<const double> b) {
  const double n = static_cast<double>(a.size());
  WindowStats s;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s.mu_a += a[i];
    s.mu_b += b[i];
  }
  s.mu_a /= n;
  s.mu_b /= n;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double da = a[i] - s.mu_a;
    const double db = b[i] - s.mu_b;
    s.var_a += da * da;
    s.var_b += db * db;
    s.cov += da * db;
  }
  s.var_a /= n;
  s.var_b /= n;
  s.cov /= n;
  return s;
}

double ssim_from_stats(const WindowStats& s, double c1, double c2) {
  return ((2.0 * s.mu_a * s.mu_b + c1) * (2.0 * s.cov + c2)) /
         ((s.mu_a * s.mu_a + s.mu_b * s.mu_b + c1) * (s.var_a + s.var_b + c2));
}

double ssim_window(std::span<const double> a, std::span<const double> b, const SsimWindowSpec& spec) {
  if (a.size() != b.size()) throw ContractError("ssim_window patch size mismatch");
  if (a.empty()) throw ContractError("ssim_window on empty patch");
  return ssim_from_stats(window_stats(a, b), spec.c1, spec.c2);
}

namespace {

void gather(std::span<const double> plane, std::size_t width, std::size_t row, std::size_t col,
            std::size_t win, std::vector<double>& out) {
  out.resize(win * win);
  for (std::size_t y = 0; y < win; ++y) {
    const double* src = plane.data() + (row + y) * width + col;
    std::copy(src, src + win, out.begin() + static_cast<std::ptrdiff_t>(y * win));
  }
}

}  // namespace

std::vector<double> ssim_map(std::span<const double> a, std::span<const double> b, std::size_t height,
                             std::size_t width, const SsimWindowSpec& spec) {
  if (a.size() != height * width || b.size() != height * width) {
    throw ContractError("ssim_map plane size mismatch");
  }
  const WindowGrid g = WindowGrid::make(height, width, spec);
  std::vector<double> out(g.count());
#pragma omp parallel
  {
    std::vector<double> pa, pb;
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(g.rows); ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) {
        gather(a, width, g.anchor_row(r), g.anchor_col(c), g.window, pa);
        gather(b, width, g.anchor_row(r), g.anchor_col(c), g.window, pb);
        out[r * g.cols + c] = ssim_from_stats(window_stats(pa, pb), spec.c1, spec.c2);
      }
    }
  }
  return out;
}

namespace {

void check_mef_inputs(std::span<const Image> stack, const Image& fused) {
  if (stack.size() < 2) throw ContractError("MEF-SSIM needs at least two exposures");
  for (const auto& img : stack) {
    if (img.channels() != 1) throw ContractError("MEF-SSIM expects grayscale exposures");
    if (!img.same_shape(fused)) throw ContractError("MEF-SSIM input size mismatch");
  }
  if (fused.channels() != 1) throw ContractError("MEF-SSIM expects a grayscale fused image");
}

}  // namespace

MefSsimReport mef_ssim(std::span<const Image> stack, const Image& fused, const SsimWindowSpec& spec,
                       double contrast_exponent) {
  check_mef_inputs(stack, fused);
  MefSsimReport report;
  report.grid = WindowGrid::make(fused.height(), fused.width(), spec);
  const WindowGrid& g = report.grid;
  report.per_patch_scores.assign(g.count(), 0.0);
  const std::size_t width = fused.width();
  const std::size_t k_count = stack.size();
  const std::size_t n = g.window * g.window;
  const double inv_n = 1.0 / static_cast<double>(n);

#pragma omp parallel
  {
    std::vector<double> centered(k_count * n);
    std::vector<double> structure(n);
    std::vector<double> fused_patch;
    std::vector<double> mu(k_count);
#pragma omp for schedule(static)
    for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(g.rows); ++r) {
      for (std::size_t c = 0; c < g.cols; ++c) {
        const std::size_t row = g.anchor_row(r);
        const std::size_t col = g.anchor_col(c);
        double desired_contrast = 0.0;
        std::fill(structure.begin(), structure.end(), 0.0);
        for (std::size_t k = 0; k < k_count; ++k) {
          auto plane = stack[k].data();
          double* xk = centered.data() + k * n;
          double sum = 0.0;
          for (std::size_t y = 0; y < g.window; ++y) {
            const double* src = plane.data() + (row + y) * width + col;
            for (std::size_t x = 0; x < g.window; ++x) {
              xk[y * g.window + x] = src[x];
              sum += src[x];
            }
          }
          mu[k] = sum * inv_n;
          double sq = 0.0;
          for (std::size_t i = 0; i < n; ++i) {
            xk[i] -= mu[k];
            sq += xk[i] * xk[i];
          }
          const double contrast = std::sqrt(sq);
          desired_contrast = std::max(desired_contrast, contrast);
          // c^p * (x - mu) / c, accumulated without forming s_k.
          if (contrast > 0.0) {
            const double scale = std::pow(contrast, contrast_exponent - 1.0);
            for (std::size_t i = 0; i < n; ++i) structure[i] += scale * xk[i];
          }
        }
        double s_norm = 0.0;
        for (double v : structure) s_norm += v * v;
        s_norm = std::sqrt(s_norm);
        const double ref_scale = s_norm > 0.0 ? desired_contrast / s_norm : 0.0;

        gather(fused.data(), width, row, col, g.window, fused_patch);
        double mu_y = 0.0;
        for (double v : fused_patch) mu_y += v;
        mu_y *= inv_n;
        double var_ref = 0.0, var_y = 0.0, cov = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
          const double ref = ref_scale * structure[i];
          const double dy = fused_patch[i] - mu_y;
          var_ref += ref * ref;
          var_y += dy * dy;
          cov += ref * dy;
        }
        var_ref *= inv_n;
        var_y *= inv_n;
        cov *= inv_n;
        report.per_patch_scores[r * g.cols + c] = (2.0 * cov + spec.c2) / (var_ref + var_y + spec.c2);
      }
    }
  }
  report.global_score = std::accumulate(report.per_patch_scores.begin(), report.per_patch_scores.end(), 0.0) /
                        static_cast<double>(g.count());
  return report;
}

namespace reference {

MefSsimReport mef_ssim(std::span<const Image> stack, const Image& fused, const SsimWindowSpec& spec,
                       double contrast_exponent) {
  check_mef_inputs(stack, fused);
  MefSsimReport report;
  report.grid = WindowGrid::make(fused.height(), fused.width(), spec);
  const WindowGrid& g = report.grid;
  const std::size_t win = g.window;
  const double n = static_cast<double>(win * win);

  auto patch = [&](const Image& img, std::size_t row, std::size_t col) {
    std::vector<double> p;
    for (std::size_t y = 0; y < win; ++y)
      for (std::size_t x = 0; x < win; ++x) p.push_back(img.at(row + y, col + x));
    return p;
  };
  auto mean_of = [&](const std::vector<double>& p) {
    double s = 0.0;
    for (double v : p) s += v;
    return s / n;
  };
  auto norm_of = [](const std::vector<double>& p) {
    double s = 0.0;
    for (double v : p) s += v * v;
    return std::sqrt(s);
  };

  double total = 0.0;
  for (std::size_t r = 0; r < g.rows; ++r) {
    for (std::size_t c = 0; c < g.cols; ++c) {
      std::vector<std::vector<double>> structures;
      std::vector<double> contrasts;
      for (const auto& img : stack) {
        std::vector<double> p = patch(img, g.anchor_row(r), g.anchor_col(c));
        const double mu = mean_of(p);
        for (double& v : p) v -= mu;
        const double contrast = norm_of(p);
        if (contrast > 0.0) {
          for (double& v : p) v /= contrast;
        }
        structures.push_back(std::move(p));
        contrasts.push_back(contrast);
      }
      const double c_hat = *std::max_element(contrasts.begin(), contrasts.end());
      std::vector<double> s_bar(win * win, 0.0);
      double weight_sum = 0.0;
      for (std::size_t k = 0; k < stack.size(); ++k) {
        const double w = std::pow(contrasts[k], contrast_exponent);
        weight_sum += w;
        for (std::size_t i = 0; i < s_bar.size(); ++i) s_bar[i] += w * structures[k][i];
      }
      if (weight_sum > 0.0) {
        for (double& v : s_bar) v /= weight_sum;
      }
      const double s_norm = norm_of(s_bar);
      std::vector<double> ref(s_bar.size(), 0.0);
      if (s_norm > 0.0) {
        for (std::size_t i = 0; i < ref.size(); ++i) ref[i] = c_hat * s_bar[i] / s_norm;
      }
      std::vector<double> y = patch(fused, g.anchor_row(r), g.anchor_col(c));
      const double mu_y = mean_of(y);
      for (double& v : y) v -= mu_y;
      double var_ref = 0.0, var_y = 0.0, cov = 0.0;
      for (std::size_t i = 0; i < y.size(); ++i) {
        var_ref += ref[i] * ref[i] / n;
        var_y += y[i] * y[i] / n;
        cov += ref[i] * y[i] / n;
      }
      const double score = (2.0 * cov + spec.c2) / (var_ref + var_y + spec.c2);
      report.per_patch_scores.push_back(score);
      total += score;
    }
  }
  report.global_score = total / static_cast<double>(g.count());
  return report;
}

}  // namespace reference

double mef_ssim_score(std::span<const Image> stack, const Image& fused, const SsimWindowSpec& spec) {
  std::vector<Image> gray;
  gray.reserve(stack.size());
  for (const auto& img : stack) gray.push_back(to_grayscale(img));
  return mef_ssim(gray, to_grayscale(fused), spec).global_score;
}

Image score_heatmap(const MefSsimReport& report) {
  std::vector<double> data(report.per_patch_scores.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = std::clamp(0.5 * (report.per_patch_scores[i] + 1.0), 0.0, 1.0);
  }
  return Image(report.grid.rows, report.grid.cols, 1, std::move(data));
}

}  // namespace hdr
