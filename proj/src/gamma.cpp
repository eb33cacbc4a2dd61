#include "hdrfuse/gamma.hpp"

#include <algorithm>
#include <cmath>

namespace hdr {

std::string_view attribute_name(AttributeKind kind) {
  switch (kind) {
    case AttributeKind::Variance: return "variance";
    case AttributeKind::Gradient: return "gradient";
    case AttributeKind::WellExposedness: return "wellexp";
    case AttributeKind::VarGrad: return "var-grad";
    case AttributeKind::GradWell: return "grad-well";
    case AttributeKind::VarWell: return "var-well";
  }
  return "unknown";
}

std::optional<AttributeKind> parse_attribute(std::string_view name) {
  for (AttributeKind k : kAllAttributeKinds) {
    if (attribute_name(k) == name) return k;
  }
  return std::nullopt;
}

namespace {

void require_gray(const Image& img) {
  if (img.channels() != 1) throw ContractError("attribute maps expect a grayscale image");
}

// Window mean of a per-pixel field.
WindowMap window_mean(std::span<const double> field, std::size_t height, std::size_t width,
                      const SsimWindowSpec& window) {
  WindowMap out;
  out.grid = WindowGrid::make(height, width, window);
  const WindowGrid& g = out.grid;
  out.values.assign(g.count(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(g.window * g.window);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(g.rows); ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    for (std::size_t c = 0; c < g.cols; ++c) {
      double sum = 0.0;
      for (std::size_t y = 0; y < g.window; ++y) {
        const double* src = field.data() + (g.anchor_row(r) + y) * width + g.anchor_col(c);
        for (std::size_t x = 0; x < g.window; ++x) sum += src[x];
      }
      out.values[r * g.cols + c] = sum * inv_n;
    }
  }
  return out;
}

void require_same_grid(const WindowMap& a, const WindowMap& b) {
  if (!(a.grid == b.grid) || a.values.size() != b.values.size()) {
    throw ContractError("attribute maps are on different window grids");
  }
}

}  // namespace

WindowMap local_variance(const Image& gray, const SsimWindowSpec& window) {
  require_gray(gray);
  WindowMap out;
  out.grid = WindowGrid::make(gray.height(), gray.width(), window);
  const WindowGrid& g = out.grid;
  out.values.assign(g.count(), 0.0);
  const double inv_n = 1.0 / static_cast<double>(g.window * g.window);
  auto plane = gray.data();
  const std::size_t width = gray.width();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t rr = 0; rr < static_cast<std::ptrdiff_t>(g.rows); ++rr) {
    const auto r = static_cast<std::size_t>(rr);
    for (std::size_t c = 0; c < g.cols; ++c) {
      // Mean taken relative to the window's first sample so constant windows
      // come out with exactly zero variance.
      const double shift = plane[g.anchor_row(r) * width + g.anchor_col(c)];
      double sum = 0.0;
      for (std::size_t y = 0; y < g.window; ++y) {
        const double* src = plane.data() + (g.anchor_row(r) + y) * width + g.anchor_col(c);
        for (std::size_t x = 0; x < g.window; ++x) sum += src[x] - shift;
      }
      const double mu = shift + sum * inv_n;
      double sq = 0.0;
      for (std::size_t y = 0; y < g.window; ++y) {
        const double* src = plane.data() + (g.anchor_row(r) + y) * width + g.anchor_col(c);
        for (std::size_t x = 0; x < g.window; ++x) sq += (src[x] - mu) * (src[x] - mu);
      }
      out.values[r * g.cols + c] = sq * inv_n;
    }
  }
  return out;
}

WindowMap local_gradient(const Image& gray, const SsimWindowSpec& window) {
  require_gray(gray);
  const std::size_t h = gray.height();
  const std::size_t w = gray.width();
  std::vector<double> magnitude(h * w);
  for (std::size_t y = 0; y < h; ++y) {
    const std::size_t ym = y == 0 ? 0 : y - 1;
    const std::size_t yp = y + 1 == h ? y : y + 1;
    for (std::size_t x = 0; x < w; ++x) {
      const std::size_t xm = x == 0 ? 0 : x - 1;
      const std::size_t xp = x + 1 == w ? x : x + 1;
      const double gx = 0.5 * (gray.at(y, xp) - gray.at(y, xm));
      const double gy = 0.5 * (gray.at(yp, x) - gray.at(ym, x));
      magnitude[y * w + x] = std::sqrt(gx * gx + gy * gy);
    }
  }
  return window_mean(magnitude, h, w, window);
}

WindowMap local_wellexposedness(const Image& gray, const SsimWindowSpec& window, double sigma_e) {
  require_gray(gray);
  const double denom = 2.0 * sigma_e * sigma_e;
  auto src = gray.data();
  std::vector<double> field(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) {
    const double d = src[i] - 0.5;
    field[i] = std::exp(-d * d / denom);
  }
  return window_mean(field, gray.height(), gray.width(), window);
}

WindowMap hybrid_attribute(const WindowMap& a, const WindowMap& b) {
  require_same_grid(a, b);
  WindowMap out;
  out.grid = a.grid;
  out.values.resize(a.values.size());
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double ss = a.values[i] * a.values[i] + b.values[i] * b.values[i];
    out.values[i] = ss > 0.0 ? a.values[i] * b.values[i] / std::sqrt(ss) : 0.0;
  }
  return out;
}

WindowMap attribute_map(const Image& gray, AttributeKind kind, const SsimWindowSpec& window,
                        double sigma_e) {
  switch (kind) {
    case AttributeKind::Variance: return local_variance(gray, window);
    case AttributeKind::Gradient: return local_gradient(gray, window);
    case AttributeKind::WellExposedness: return local_wellexposedness(gray, window, sigma_e);
    case AttributeKind::VarGrad:
      return hybrid_attribute(local_variance(gray, window), local_gradient(gray, window));
    case AttributeKind::GradWell:
      return hybrid_attribute(local_wellexposedness(gray, window, sigma_e), local_gradient(gray, window));
    case AttributeKind::VarWell:
      return hybrid_attribute(local_variance(gray, window), local_wellexposedness(gray, window, sigma_e));
  }
  throw ContractError("unknown attribute kind");
}

GammaMap gamma_from_attributes(const WindowMap& attr_under, const WindowMap& attr_over, double floor) {
  require_same_grid(attr_under, attr_over);
  GammaMap gm;
  gm.grid = attr_under.grid;
  gm.under_values.resize(attr_under.values.size());
  for (std::size_t i = 0; i < gm.under_values.size(); ++i) {
    const double gu = std::max(attr_under.values[i], floor);
    const double go = std::max(attr_over.values[i], floor);
    gm.under_values[i] = gu / (gu + go);
  }
  return gm;
}

std::pair<Image, Image> render_attribute_maps(const ExposurePair& pair, AttributeKind kind,
                                              const SsimWindowSpec& window, double sigma_e) {
  const WindowMap u = attribute_map(to_grayscale(pair.under), kind, window, sigma_e);
  const WindowMap o = attribute_map(to_grayscale(pair.over), kind, window, sigma_e);
  double peak = 0.0;
  for (double v : u.values) peak = std::max(peak, v);
  for (double v : o.values) peak = std::max(peak, v);
  auto render = [&](const WindowMap& m) {
    std::vector<double> data(m.values.size(), 0.0);
    if (peak > 0.0) {
      for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::clamp(m.values[i] / peak, 0.0, 1.0);
    }
    return Image(m.grid.rows, m.grid.cols, 1, std::move(data));
  };
  return {render(u), render(o)};
}

}  // namespace hdr
