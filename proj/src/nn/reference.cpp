#include "hdrfuse/image.hpp"
#include "hdrfuse/nn/layers.hpp"

namespace hdr::nn::reference {
namespace {

// Zero-padded read.
template <typename T>
T tap(const Tensor<T>& x, std::size_t n, std::size_t c, std::ptrdiff_t y, std::ptrdiff_t xx) {
  if (y < 0 || xx < 0 || y >= static_cast<std::ptrdiff_t>(x.dim(2)) || xx >= static_cast<std::ptrdiff_t>(x.dim(3))) {
    return T(0);
  }
  return x.at(n, c, static_cast<std::size_t>(y), static_cast<std::size_t>(xx));
}

template <typename T>
void check(const Tensor<T>& x, const Tensor<T>& kernel) {
  if (x.rank() != 4 || kernel.rank() != 4 || kernel.dim(1) != x.dim(1) || kernel.dim(2) != 3 || kernel.dim(3) != 3) {
    throw ContractError("reference conv2d shape mismatch");
  }
}

}  // namespace

template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias) {
  check(x, kernel);
  const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3), cout = kernel.dim(0);
  Tensor<T> y({batch, cout, h, w});
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t oc = 0; oc < cout; ++oc)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
          T acc = bias[oc];
          for (std::size_t ic = 0; ic < cin; ++ic)
            for (std::size_t ky = 0; ky < 3; ++ky)
              for (std::size_t kx = 0; kx < 3; ++kx)
                acc += kernel.at(oc, ic, ky, kx) *
                       tap(x, n, ic, static_cast<std::ptrdiff_t>(r + ky) - 1, static_cast<std::ptrdiff_t>(c + kx) - 1);
          y.at(n, oc, r, c) = acc;
        }
  return y;
}

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& grad_out) {
  check(x, kernel);
  const std::size_t batch = x.dim(0), cin = x.dim(1), h = x.dim(2), w = x.dim(3), cout = kernel.dim(0);
  ConvGrads<T> g{Tensor<T>(x.shape()), Tensor<T>(kernel.shape()), Tensor<T>({cout})};
  for (std::size_t n = 0; n < batch; ++n)
    for (std::size_t oc = 0; oc < cout; ++oc)
      for (std::size_t r = 0; r < h; ++r)
        for (std::size_t c = 0; c < w; ++c) {
          const T go = grad_out.at(n, oc, r, c);
          g.bias[oc] += go;
          for (std::size_t ic = 0; ic < cin; ++ic)
            for (std::size_t ky = 0; ky < 3; ++ky)
              for (std::size_t kx = 0; kx < 3; ++kx) {
                const auto yy = static_cast<std::ptrdiff_t>(r + ky) - 1;
                const auto xx = static_cast<std::ptrdiff_t>(c + kx) - 1;
                if (yy < 0 || xx < 0 || yy >= static_cast<std::ptrdiff_t>(h) || xx >= static_cast<std::ptrdiff_t>(w)) continue;
                g.kernel.at(oc, ic, ky, kx) += go * x.at(n, ic, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx));
                g.input.at(n, ic, static_cast<std::size_t>(yy), static_cast<std::size_t>(xx)) += go * kernel.at(oc, ic, ky, kx);
              }
        }
  return g;
}

template Tensor<float> conv2d_forward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template Tensor<double> conv2d_forward(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);
template ConvGrads<float> conv2d_backward(const Tensor<float>&, const Tensor<float>&, const Tensor<float>&);
template ConvGrads<double> conv2d_backward(const Tensor<double>&, const Tensor<double>&, const Tensor<double>&);

}  // namespace hdr::nn::reference
