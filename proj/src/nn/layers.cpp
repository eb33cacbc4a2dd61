#include "hdrfuse/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "hdrfuse/image.hpp"

namespace hdr::nn {
namespace {

void require_rank4(const Shape& s, const char* what) {
  if (s.size() != 4) throw ContractError(std::string(what) + " expects a rank-4 tensor, got " + shape_string(s));
}

void check_conv_shapes(const Shape& x, const Shape& k) {
  require_rank4(x, "conv2d");
  if (k.size() != 4 || k[2] != 3 || k[3] != 3) throw ContractError("conv2d kernel must be (out, in, 3, 3)");
  if (x[1] != k[1]) {
    throw ContractError("conv2d channel mismatch: input " + shape_string(x) + " kernel " + shape_string(k));
  }
}

template <typename T>
void check_conv(const Tensor<T>& x, const Tensor<T>& kernel) {
  check_conv_shapes(x.shape(), kernel.shape());
}

// Index range [lo, hi) of output positions whose input tap at offset d lies
// inside [0, n).
inline void tap_range(std::ptrdiff_t n, std::ptrdiff_t d, std::ptrdiff_t& lo, std::ptrdiff_t& hi) {
  lo = std::max<std::ptrdiff_t>(0, -d);
  hi = std::min<std::ptrdiff_t>(n, n - d);
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  check_conv(x, kernel);
  const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = kernel.dim(0);
  if (bias.size() != cout) throw ContractError("conv2d bias length mismatch");
  Tensor<T> y({batch, cout, h, w});
  const std::size_t plane = h * w;
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t job = 0; job < static_cast<std::ptrdiff_t>(batch * cout); ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / cout;
    const std::size_t oc = static_cast<std::size_t>(job) % cout;
    T* out = y.data() + (n * cout + oc) * plane;
    std::fill(out, out + plane, bias[oc]);
    for (std::size_t ic = 0; ic < cin; ++ic) {
      const T* in = x.data() + (n * cin + ic) * plane;
      const T* k = kernel.data() + (oc * cin + ic) * 9;
      for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
        const std::ptrdiff_t dy = ky - 1;
        std::ptrdiff_t y0, y1;
        tap_range(H, dy, y0, y1);
        for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
          const std::ptrdiff_t dx = kx - 1;
          std::ptrdiff_t x0, x1;
          tap_range(W, dx, x0, x1);
          const T wv = k[ky * 3 + kx];
          for (std::ptrdiff_t yy = y0; yy < y1; ++yy) {
            T* orow = out + yy * W;
            const T* irow = in + (yy + dy) * W + dx;
            for (std::ptrdiff_t xx = x0; xx < x1; ++xx) orow[xx] += wv * irow[xx];
          }
        }
      }
    }
  }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& grad_out) {
  check_conv(x, kernel);
  const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3);
  const std::size_t cout = kernel.dim(0);
  if (grad_out.shape() != Shape{batch, cout, h, w}) {
    throw ContractError("conv2d_backward grad shape " + shape_string(grad_out.shape()) + " mismatch");
  }
  ConvGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(kernel.shape()), Tensor<T>({cout})};
  const std::size_t plane = h * w;
  const auto H = static_cast<std::ptrdiff_t>(h);
  const auto W = static_cast<std::ptrdiff_t>(w);

  // d/dx: each (n, ic) plane gathers from every output channel.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t job = 0; job < static_cast<std::ptrdiff_t>(batch * cin); ++job) {
    const std::size_t n = static_cast<std::size_t>(job) / cin;
    const std::size_t ic = static_cast<std::size_t>(job) % cin;
    T* gx = g.input.data() + (n * cin + ic) * plane;
    for (std::size_t oc = 0; oc < cout; ++oc) {
      const T* go = grad_out.data() + (n * cout + oc) * plane;
      const T* k = kernel.data() + (oc * cin + ic) * 9;
      for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
        const std::ptrdiff_t dy = ky - 1;
        std::ptrdiff_t y0, y1;
        tap_range(H, dy, y0, y1);
        for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
          const std::ptrdiff_t dx = kx - 1;
          std::ptrdiff_t x0, x1;
          tap_range(W, dx, x0, x1);
          const T wv = k[ky * 3 + kx];
          for (std::ptrdiff_t yy = y0; yy < y1; ++yy) {
            const T* grow = go + yy * W;
            T* xrow = gx + (yy + dy) * W + dx;
            for (std::ptrdiff_t xx = x0; xx < x1; ++xx) xrow[xx] += wv * grow[xx];
          }
        }
      }
    }
  }

  // d/dkernel: one (oc, ic) pair per job, summed over batch and space.
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t job = 0; job < static_cast<std::ptrdiff_t>(cout * cin); ++job) {
    const std::size_t oc = static_cast<std::size_t>(job) / cin;
    const std::size_t ic = static_cast<std::size_t>(job) % cin;
    T* gk = g.kernel.data() + (oc * cin + ic) * 9;
    for (std::ptrdiff_t ky = 0; ky < 3; ++ky) {
      const std::ptrdiff_t dy = ky - 1;
      std::ptrdiff_t y0, y1;
      tap_range(H, dy, y0, y1);
      for (std::ptrdiff_t kx = 0; kx < 3; ++kx) {
        const std::ptrdiff_t dx = kx - 1;
        std::ptrdiff_t x0, x1;
        tap_range(W, dx, x0, x1);
        T acc = 0;
        for (std::size_t n = 0; n < batch; ++n) {
          const T* go = grad_out.data() + (n * cout + oc) * plane;
          const T* in = x.data() + (n * cin + ic) * plane;
          for (std::ptrdiff_t yy = y0; yy < y1; ++yy) {
            const T* grow = go + yy * W;
            const T* irow = in + (yy + dy) * W + dx;
            for (std::ptrdiff_t xx = x0; xx < x1; ++xx) acc += grow[xx] * irow[xx];
          }
        }
        gk[ky * 3 + kx] = acc;
      }
    }
  }

  for (std::size_t oc = 0; oc < cout; ++oc) {
    T acc = 0;
    for (std::size_t n = 0; n < batch; ++n) {
      const T* go = grad_out.data() + (n * cout + oc) * plane;
      for (std::size_t i = 0; i < plane; ++i) acc += go[i];
    }
    g.bias[oc] = acc;
  }
  return g;
}

template <typename T>
BatchNormParams<T>::BatchNormParams(std::size_t channels)
    : scale({channels}, T(1)), shift({channels}, T(0)), running_mean({channels}, T(0)),
      running_var({channels}, T(1)) {}

template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormParams<T>& p, BatchNormMode mode,
                            BatchNormCache<T>* cache, double momentum, double eps) {
  require_rank4(x.shape(), "batchnorm");
  const std::size_t batch = x.dim(0), ch = x.dim(1), plane = x.dim(2) * x.dim(3);
  if (p.scale.size() != ch || p.shift.size() != ch) throw ContractError("batchnorm parameter length mismatch");
  if (mode == BatchNormMode::Inference && p.updates == 0) {
    throw ContractError("batchnorm inference before running statistics were initialized");
  }
  Tensor<T> y(x.shape());
  if (cache) {
    cache->normalized = Tensor<T>(x.shape());
    cache->inv_std.assign(ch, T(0));
  }
  const double count = static_cast<double>(batch * plane);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(ch); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    double mean, var;
    if (mode == BatchNormMode::Training) {
      double sum = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* src = x.data() + (n * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sum += src[i];
      }
      mean = sum / count;
      double sq = 0.0;
      for (std::size_t n = 0; n < batch; ++n) {
        const T* src = x.data() + (n * ch + c) * plane;
        for (std::size_t i = 0; i < plane; ++i) sq += (src[i] - mean) * (src[i] - mean);
      }
      var = sq / count;
      p.running_mean[c] = static_cast<T>(momentum * p.running_mean[c] + (1.0 - momentum) * mean);
      p.running_var[c] = static_cast<T>(momentum * p.running_var[c] + (1.0 - momentum) * var);
    } else {
      mean = p.running_mean[c];
      var = p.running_var[c];
    }
    const T inv_std = static_cast<T>(1.0 / std::sqrt(var + eps));
    const T m = static_cast<T>(mean);
    const T g = p.scale[c];
    const T b = p.shift[c];
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * ch + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        const T xhat = (x[off + i] - m) * inv_std;
        if (cache) cache->normalized[off + i] = xhat;
        y[off + i] = g * xhat + b;
      }
    }
    if (cache) cache->inv_std[c] = inv_std;
  }
  if (mode == BatchNormMode::Training) ++p.updates;
  return y;
}

template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                                     const Tensor<T>& scale) {
  const Shape& s = grad_out.shape();
  require_rank4(s, "batchnorm_backward");
  if (cache.normalized.shape() != s) throw ContractError("batchnorm_backward cache shape mismatch");
  const std::size_t batch = s[0], ch = s[1], plane = s[2] * s[3];
  BatchNormGrads<T> g{Tensor<T>(s), Tensor<T>({ch}), Tensor<T>({ch})};
  const double count = static_cast<double>(batch * plane);

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t cc = 0; cc < static_cast<std::ptrdiff_t>(ch); ++cc) {
    const auto c = static_cast<std::size_t>(cc);
    double sum_g = 0.0, sum_gx = 0.0;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * ch + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        sum_g += grad_out[off + i];
        sum_gx += grad_out[off + i] * cache.normalized[off + i];
      }
    }
    g.shift[c] = static_cast<T>(sum_g);
    g.scale[c] = static_cast<T>(sum_gx);
    const double k = static_cast<double>(scale[c]) * cache.inv_std[c] / count;
    for (std::size_t n = 0; n < batch; ++n) {
      const std::size_t off = (n * ch + c) * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        g.input[off + i] =
            static_cast<T>(k * (count * grad_out[off + i] - sum_g - cache.normalized[off + i] * sum_gx));
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x) {
  Tensor<T> y(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
  return y;
}

template <typename T>
Tensor<T> relu_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
  if (output.shape() != grad_out.shape()) throw ContractError("relu_backward shape mismatch");
  Tensor<T> g(output.shape());
  for (std::size_t i = 0; i < g.size(); ++i) g[i] = output[i] > T(0) ? grad_out[i] : T(0);
  return g;
}

template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& x) {
  require_rank4(x.shape(), "maxpool2");
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  if (h % 2 != 0 || w % 2 != 0) throw ContractError("maxpool2 needs even spatial dims, got " + shape_string(x.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  PoolResult<T> r{Tensor<T>({batch, ch, oh, ow}), std::vector<std::uint32_t>(batch * ch * oh * ow)};
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < static_cast<std::ptrdiff_t>(batch * ch); ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    for (std::size_t y = 0; y < oh; ++y) {
      for (std::size_t xx = 0; xx < ow; ++xx) {
        std::size_t best = (p * h + 2 * y) * w + 2 * xx;
        const std::size_t cand[3] = {best + 1, best + w, best + w + 1};
        for (std::size_t c : cand) {
          if (x[c] > x[best]) best = c;
        }
        const std::size_t o = (p * oh + y) * ow + xx;
        r.output[o] = x[best];
        r.argmax[o] = static_cast<std::uint32_t>(best);
      }
    }
  }
  return r;
}

template <typename T>
Tensor<T> maxpool2_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax,
                            const Tensor<T>& grad_out) {
  if (argmax.size() != grad_out.size()) throw ContractError("maxpool2_backward index mismatch");
  Tensor<T> g(input_shape);
  for (std::size_t o = 0; o < argmax.size(); ++o) g[argmax[o]] += grad_out[o];
  return g;
}

template <typename T>
Tensor<T> upsample2_forward(const Tensor<T>& x) {
  require_rank4(x.shape(), "upsample2");
  const std::size_t batch = x.dim(0), ch = x.dim(1), h = x.dim(2), w = x.dim(3);
  Tensor<T> y({batch, ch, 2 * h, 2 * w});
  const std::size_t ow = 2 * w;
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t pp = 0; pp < static_cast<std::ptrdiff_t>(batch * ch); ++pp) {
    const auto p = static_cast<std::size_t>(pp);
    for (std::size_t yy = 0; yy < 2 * h; ++yy) {
      const T* src = x.data() + (p * h + yy / 2) * w;
      T* dst = y.data() + (p * 2 * h + yy) * ow;
      for (std::size_t xx = 0; xx < ow; ++xx) dst[xx] = src[xx / 2];
    }
  }
  return y;
}

template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_out) {
  require_rank4(grad_out.shape(), "upsample2_backward");
  const std::size_t batch = grad_out.dim(0), ch = grad_out.dim(1);
  const std::size_t h = grad_out.dim(2) / 2, w = grad_out.dim(3) / 2;
  Tensor<T> g({batch, ch, h, w});
  const std::size_t ow = 2 * w;
  for (std::size_t p = 0; p < batch * ch; ++p) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const T* src = grad_out.data() + (p * 2 * h + 2 * y) * ow + 2 * x;
        g[(p * h + y) * w + x] = src[0] + src[1] + src[ow] + src[ow + 1];
      }
    }
  }
  return g;
}

template <typename T>
Tensor<T> softmax_channels_forward(const Tensor<T>& x) {
  require_rank4(x.shape(), "softmax_channels");
  const std::size_t batch = x.dim(0), ch = x.dim(1), plane = x.dim(2) * x.dim(3);
  Tensor<T> y(x.shape());
  for (std::size_t n = 0; n < batch; ++n) {
    const std::size_t base = n * ch * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      T peak = x[base + i];
      for (std::size_t c = 1; c < ch; ++c) peak = std::max(peak, x[base + c * plane + i]);
      T total = 0;
      for (std::size_t c = 0; c < ch; ++c) {
        const T e = std::exp(x[base + c * plane + i] - peak);
        y[base + c * plane + i] = e;
        total += e;
      }
      for (std::size_t c = 0; c < ch; ++c) y[base + c * plane + i] /= total;
    }
  }
  return y;
}

template <typename T>
Tensor<T> softmax_channels_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
  if (output.shape() != grad_out.shape()) throw ContractError("softmax_backward shape mismatch");
  const std::size_t batch = output.dim(0), ch = output.dim(1), plane = output.dim(2) * output.dim(3);
  Tensor<T> g(output.shape());
  for (std::size_t n = 0; n < batch; ++n) {
    const std::size_t base = n * ch * plane;
    for (std::size_t i = 0; i < plane; ++i) {
      T dot = 0;
      for (std::size_t c = 0; c < ch; ++c) dot += output[base + c * plane + i] * grad_out[base + c * plane + i];
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t k = base + c * plane + i;
        g[k] = output[k] * (grad_out[k] - dot);
      }
    }
  }
  return g;
}

#define HDR_INSTANTIATE_LAYERS(T)                                                                        \
  template Tensor<T> conv2d_forward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);             \
  template ConvGrads<T> conv2d_backward(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);         \
  template struct BatchNormParams<T>;                                                                  \
  template Tensor<T> batchnorm_forward(const Tensor<T>&, BatchNormParams<T>&, BatchNormMode,           \
                                       BatchNormCache<T>*, double, double);                            \
  template BatchNormGrads<T> batchnorm_backward(const Tensor<T>&, const BatchNormCache<T>&,            \
                                                const Tensor<T>&);                                     \
  template Tensor<T> relu_forward(const Tensor<T>&);                                                   \
  template Tensor<T> relu_backward(const Tensor<T>&, const Tensor<T>&);                                \
  template PoolResult<T> maxpool2_forward(const Tensor<T>&);                                           \
  template Tensor<T> maxpool2_backward(const Shape&, const std::vector<std::uint32_t>&, const Tensor<T>&); \
  template Tensor<T> upsample2_forward(const Tensor<T>&);                                              \
  template Tensor<T> upsample2_backward(const Tensor<T>&);                                             \
  template Tensor<T> softmax_channels_forward(const Tensor<T>&);                                       \
  template Tensor<T> softmax_channels_backward(const Tensor<T>&, const Tensor<T>&);

HDR_INSTANTIATE_LAYERS(float)
HDR_INSTANTIATE_LAYERS(double)

}  // namespace hdr::nn
