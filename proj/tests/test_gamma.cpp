#include <gtest/gtest.h>

#include <cmath>

#include "hdrfuse/gamma.hpp"
#include "support.hpp"

using namespace hdr;

namespace {

const SsimWindowSpec kWin{7, 3, 1e-4, 9e-4};

double pixel(const Image& img, std::ptrdiff_t y, std::ptrdiff_t x) {
  y = std::clamp<std::ptrdiff_t>(y, 0, static_cast<std::ptrdiff_t>(img.height()) - 1);
  x = std::clamp<std::ptrdiff_t>(x, 0, static_cast<std::ptrdiff_t>(img.width()) - 1);
  return img.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x));
}

// Per-window loop oracles for the three attributes.
std::vector<double> oracle_attribute(const Image& img, const SsimWindowSpec& spec, int kind) {
  const WindowGrid g = WindowGrid::make(img.height(), img.width(), spec);
  std::vector<double> out;
  const std::size_t n = spec.window_size;
  for (std::size_t r = 0; r < g.rows; ++r)
    for (std::size_t c = 0; c < g.cols; ++c) {
      const auto y0 = static_cast<std::ptrdiff_t>(g.anchor_row(r)), x0 = static_cast<std::ptrdiff_t>(g.anchor_col(c));
      double acc = 0.0, mean = 0.0;
      for (std::size_t i = 0; i < n * n; ++i) mean += pixel(img, y0 + static_cast<std::ptrdiff_t>(i / n), x0 + static_cast<std::ptrdiff_t>(i % n));
      mean /= static_cast<double>(n * n);
      for (std::size_t i = 0; i < n * n; ++i) {
        const std::ptrdiff_t y = y0 + static_cast<std::ptrdiff_t>(i / n), x = x0 + static_cast<std::ptrdiff_t>(i % n);
        const double v = pixel(img, y, x);
        if (kind == 0) acc += (v - mean) * (v - mean);
        if (kind == 1) {
          const double gx = (pixel(img, y, x + 1) - pixel(img, y, x - 1)) / 2.0;
          const double gy = (pixel(img, y + 1, x) - pixel(img, y - 1, x)) / 2.0;
          acc += std::sqrt(gx * gx + gy * gy);
        }
        if (kind == 2) acc += std::exp(-(v - 0.5) * (v - 0.5) / (2 * 0.2 * 0.2));
      }
      out.push_back(acc / static_cast<double>(n * n));
    }
  return out;
}

WindowMap constant_map(double v, std::size_t count = 4) {
  WindowMap m;
  m.grid.rows = 1;
  m.grid.cols = count;
  m.values.assign(count, v);
  return m;
}

}  // namespace

TEST(Attributes, ClosedForms) {
  const SsimWindowSpec w2{2, 2, 1e-4, 9e-4};
  EXPECT_EQ(local_variance(Image(4, 4, 1, 0.3), w2).values, std::vector<double>(4, 0.0));
  Image half(2, 2, 1, std::vector<double>{0, 1, 0, 1});
  EXPECT_DOUBLE_EQ(local_variance(half, w2).values[0], 0.25);

  EXPECT_EQ(local_gradient(Image(9, 9, 1, 0.4), kWin).values, std::vector<double>(1, 0.0));
  Image ramp(12, 12, 1);
  const double delta = 0.05;
  for (std::size_t y = 0; y < 12; ++y)
    for (std::size_t x = 0; x < 12; ++x) ramp.at(y, x) = static_cast<double>(y) * delta;
  const SsimWindowSpec interior{3, 1, 1e-4, 9e-4};
  const auto g = local_gradient(ramp, interior);
  const WindowGrid grid = WindowGrid::make(12, 12, interior);
  // Windows away from the top and bottom rows see only interior pixels.
  for (std::size_t r = 1; r + 1 < grid.rows; ++r) EXPECT_NEAR(g.values[r * grid.cols], delta, 1e-12);

  EXPECT_DOUBLE_EQ(local_wellexposedness(Image(7, 7, 1, 0.5), kWin, 0.2).values[0], 1.0);
  EXPECT_NEAR(local_wellexposedness(Image(7, 7, 1, 0.0), kWin, 0.2).values[0], std::exp(-3.125), 1e-15);
}

TEST(Attributes, MatchLoopOracles) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 20; ++trial) {
    const Image img = test::random_image(rng, 15, 19, 1);
    const auto var = local_variance(img, kWin), grad = local_gradient(img, kWin),
               well = local_wellexposedness(img, kWin, 0.2);
    const auto ov = oracle_attribute(img, kWin, 0), og = oracle_attribute(img, kWin, 1),
               ow = oracle_attribute(img, kWin, 2);
    ASSERT_EQ(var.values.size(), ov.size());
    for (std::size_t i = 0; i < ov.size(); ++i) {
      EXPECT_NEAR(var.values[i], ov[i], 1e-12);
      EXPECT_NEAR(grad.values[i], og[i], 1e-12);
      EXPECT_NEAR(well.values[i], ow[i], 1e-12);
      EXPECT_GE(var.values[i], 0.0);
      EXPECT_GE(grad.values[i], 0.0);
      EXPECT_LE(well.values[i], 1.0);
    }
  }
}

TEST(Hybrid, ClosedFormsAndBound) {
  EXPECT_NEAR(hybrid_attribute(constant_map(0.3), constant_map(0.3)).values[0], 0.3 / std::sqrt(2.0), 1e-15);
  EXPECT_EQ(hybrid_attribute(constant_map(0.0), constant_map(0.7)).values[0], 0.0);
  EXPECT_EQ(hybrid_attribute(constant_map(0.0), constant_map(0.0)).values[0], 0.0);
  EXPECT_NEAR(hybrid_attribute(constant_map(0.3), constant_map(0.4)).values[0], 0.24, 1e-15);
  EXPECT_THROW(hybrid_attribute(constant_map(0.1, 3), constant_map(0.1, 4)), ContractError);

  std::mt19937_64 rng(2);
  for (int i = 0; i < 200; ++i) {
    const double a = test::uniform01(rng), b = test::uniform01(rng);
    EXPECT_LE(hybrid_attribute(constant_map(a, 1), constant_map(b, 1)).values[0], std::min(a, b) + 1e-15);
  }
}

TEST(Gamma, FloorAndRatios) {
  EXPECT_DOUBLE_EQ(gamma_from_attributes(constant_map(0.2), constant_map(0.2)).under(0), 0.5);
  EXPECT_DOUBLE_EQ(gamma_from_attributes(constant_map(0.0), constant_map(0.0)).under(0), 0.5);
  EXPECT_DOUBLE_EQ(gamma_from_attributes(constant_map(3e-5), constant_map(7e-5)).under(0), 0.5);
  EXPECT_NEAR(gamma_from_attributes(constant_map(0.01), constant_map(0.04)).under(0), 0.2, 1e-15);
  EXPECT_THROW(gamma_from_attributes(constant_map(0.1, 2), constant_map(0.1, 3)), ContractError);
}

TEST(Gamma, ComplementAndMonotone) {
  std::mt19937_64 rng(3);
  for (AttributeKind kind : kAllAttributeKinds) {
    for (int trial = 0; trial < 20; ++trial) {
      const Image u = test::random_image(rng, 14, 14, 1, 0.0, 0.6), o = test::random_image(rng, 14, 14, 1, 0.3, 1.0);
      const auto gm = gamma_from_attributes(attribute_map(u, kind, kWin, 0.2), attribute_map(o, kind, kWin, 0.2));
      for (std::size_t w = 0; w < gm.under_values.size(); ++w) {
        EXPECT_GE(gm.under(w), 0.0);
        EXPECT_LE(gm.under(w), 1.0);
        EXPECT_EQ(gm.under(w) + gm.over(w), gm.under(w) + (1.0 - gm.under(w)));
        EXPECT_NEAR(gm.under(w) + gm.over(w), 1.0, 1e-15);
      }
    }
  }
  for (int i = 0; i < 200; ++i) {
    const double a = 1e-4 + test::uniform01(rng), b = test::uniform01(rng), bump = test::uniform01(rng);
    EXPECT_LE(gamma_from_attributes(constant_map(a, 1), constant_map(b, 1)).under(0),
              gamma_from_attributes(constant_map(a + bump, 1), constant_map(b, 1)).under(0));
  }
}

TEST(Gamma, NamesRoundTrip) {
  for (AttributeKind kind : kAllAttributeKinds) EXPECT_EQ(parse_attribute(attribute_name(kind)), kind);
  EXPECT_FALSE(parse_attribute("brightness").has_value());
  EXPECT_EQ(parse_attribute("var-grad"), AttributeKind::VarGrad);
  EXPECT_EQ(parse_attribute("wellexp"), AttributeKind::WellExposedness);
}

TEST(RenderAttributes, FlatAndSymmetricInputs) {
  const Image flat(14, 14, 3, 0.4);
  const auto [fu, fo] = render_attribute_maps(ExposurePair(flat, flat), AttributeKind::Variance, kWin);
  for (double v : fu.data()) EXPECT_EQ(v, 0.0);
  for (double v : fo.data()) EXPECT_EQ(v, 0.0);

  std::mt19937_64 rng(9);
  const Image img = test::random_image(rng, 14, 14, 3);
  for (AttributeKind kind : kAllAttributeKinds) {
    const auto [a, b] = render_attribute_maps(ExposurePair(img, img), kind, kWin);
    EXPECT_EQ(a, b);
    EXPECT_LE(a.max(), 1.0);
  }
}

TEST(RenderAttributes, GradientPeaksOnEdge) {
  Image edge(21, 21, 3, 0.1);
  for (std::size_t y = 0; y < 21; ++y)
    for (std::size_t x = 10; x < 21; ++x)
      for (std::size_t c = 0; c < 3; ++c) edge.at(y, x, c) = 0.9;
  const SsimWindowSpec spec{3, 1, 1e-4, 9e-4};
  const auto [u, o] = render_attribute_maps(ExposurePair(edge, edge), AttributeKind::Gradient, spec);
  // Windows whose columns straddle x = 9..10 contain the step.
  for (std::size_t r = 0; r < u.height(); ++r) {
    for (std::size_t c = 0; c < u.width(); ++c) {
      const bool on_edge = c + 2 >= 9 && c <= 10;
      if (on_edge) EXPECT_GT(u.at(r, c), 0.0);
      else EXPECT_EQ(u.at(r, c), 0.0);
    }
    EXPECT_EQ(u.at(r, 8), 1.0);
  }
}
