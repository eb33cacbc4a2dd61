#include "hdrfuse/loss.hpp"

namespace hdr {

GammaMap compute_gamma(const ExposurePair& pair, const LossConfig& cfg) {
  const WindowMap u = attribute_map(to_grayscale(pair.under), cfg.gamma_kind, cfg.window, cfg.sigma_e);
  const WindowMap o = attribute_map(to_grayscale(pair.over), cfg.gamma_kind, cfg.window, cfg.sigma_e);
  return gamma_from_attributes(u, o, cfg.gamma_floor);
}

namespace {

// Adds d ssim(x, y; w) / d y, scaled by `weight`, into grad (stride `ch`).
// Returns the window's SSIM value.
double ssim_window_with_grad(std::span<const double> x, std::span<const double> y, std::size_t width,
                             std::size_t ch, std::size_t c, std::size_t row, std::size_t col,
                             std::size_t win, double c1, double c2, double weight, std::vector<double>& grad) {
  const double n = static_cast<double>(win * win);
  auto idx = [&](std::size_t dy, std::size_t dx) { return ((row + dy) * width + col + dx) * ch + c; };
  double mx = 0, my = 0;
  for (std::size_t dy = 0; dy < win; ++dy)
    for (std::size_t dx = 0; dx < win; ++dx) {
      mx += x[idx(dy, dx)];
      my += y[idx(dy, dx)];
    }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0, cxy = 0;
  for (std::size_t dy = 0; dy < win; ++dy)
    for (std::size_t dx = 0; dx < win; ++dx) {
      const double a = x[idx(dy, dx)] - mx;
      const double b = y[idx(dy, dx)] - my;
      vx += a * a;
      vy += b * b;
      cxy += a * b;
    }
  vx /= n;
  vy /= n;
  cxy /= n;
  const double a1 = 2 * mx * my + c1;
  const double a2 = 2 * cxy + c2;
  const double b1 = mx * mx + my * my + c1;
  const double b2 = vx + vy + c2;
  const double s = a1 * a2 / (b1 * b2);
  if (weight != 0.0) {
    const double inv = 1.0 / (b1 * b2);
    for (std::size_t dy = 0; dy < win; ++dy)
      for (std::size_t dx = 0; dx < win; ++dx) {
        const std::size_t k = idx(dy, dx);
        const double xc = x[k] - mx;
        const double yc = y[k] - my;
        const double d = (2 * mx / n * a2 + a1 * 2 * xc / n) * inv - s * (2 * my / n / b1 + 2 * yc / n / b2);
        grad[k] += weight * d;
      }
  }
  return s;
}

}  // namespace

LossResult weighted_ssim_loss(const ExposurePair& pair, std::span<const double> fused, const GammaMap& gamma,
                              const LossConfig& cfg) {
  const Image& under = pair.under;
  const Image& over = pair.over;
  if (!under.same_shape(over) || fused.size() != under.size()) {
    throw ContractError("loss inputs differ in size");
  }
  const WindowGrid grid = WindowGrid::make(under.height(), under.width(), cfg.window);
  if (!(grid == gamma.grid)) throw ContractError("gamma map grid does not match loss windows");
  const std::size_t ch = under.channels();
  const double norm = 1.0 / static_cast<double>(ch * grid.count());

  LossResult r;
  r.grad.assign(fused.size(), 0.0);
  double acc = 0.0;
  // Windows may overlap when stride < window; gradient accumulation stays
  // sequential so the sum order is fixed.
  for (std::size_t c = 0; c < ch; ++c) {
    for (std::size_t gr = 0; gr < grid.rows; ++gr) {
      for (std::size_t gc = 0; gc < grid.cols; ++gc) {
        const std::size_t w = gr * grid.cols + gc;
        const double gu = gamma.under(w);
        const double go = gamma.over(w);
        const double su = ssim_window_with_grad(under.data(), fused, under.width(), ch, c, grid.anchor_row(gr),
                                                grid.anchor_col(gc), grid.window, cfg.window.c1, cfg.window.c2,
                                                -gu * norm, r.grad);
        const double so = ssim_window_with_grad(over.data(), fused, under.width(), ch, c, grid.anchor_row(gr),
                                                grid.anchor_col(gc), grid.window, cfg.window.c1, cfg.window.c2,
                                                -go * norm, r.grad);
        acc += gu * su + go * so;
      }
    }
  }
  r.loss = 1.0 - acc * norm;
  return r;
}

LossResult weighted_ssim_loss(const ExposurePair& pair, const Image& fused, const LossConfig& cfg) {
  if (!fused.same_shape(pair.under)) throw ContractError("fused image shape differs from the exposures");
  return weighted_ssim_loss(pair, fused.data(), compute_gamma(pair, cfg), cfg);
}

}  // namespace hdr
