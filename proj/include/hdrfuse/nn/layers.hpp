#pragma once

#include <cstdint>
#include <vector>

#include "hdrfuse/nn/tensor.hpp"

// Forward/backward kernels for the fusion network. All activations are rank-4
// (N, C, H, W). Work is split across OpenMP threads so that every output
// element is written by exactly one thread in a fixed summation order, which
// keeps results independent of the thread count.

namespace hdr::nn {

enum class LayerKind : std::uint8_t { Conv3x3 = 0, BatchNorm = 1, ReLU = 2, MaxPool2 = 3, Upsample2 = 4, Softmax = 5 };

struct LayerSpec {
  LayerKind kind = LayerKind::Conv3x3;
  std::uint32_t in_channels = 0;
  std::uint32_t out_channels = 0;
  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// 3x3 cross-correlation, stride 1, zero padding 1. kernel: (out, in, 3, 3).
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias);

template <typename T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> kernel;
  Tensor<T> bias;
};

template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& grad_out);

enum class BatchNormMode { Training, Inference };

inline constexpr double kBatchNormMomentum = 0.9;
inline constexpr double kBatchNormEps = 1e-5;

template <typename T>
struct BatchNormParams {
  Tensor<T> scale;
  Tensor<T> shift;
  Tensor<T> running_mean;
  Tensor<T> running_var;
  std::uint64_t updates = 0;  // training-mode passes folded into the running stats

  explicit BatchNormParams(std::size_t channels = 0);
};

template <typename T>
struct BatchNormCache {
  Tensor<T> normalized;    // (x - mean) * inv_std, before the affine step
  std::vector<T> inv_std;  // per channel
};

/// Training mode normalizes with the batch's population statistics and folds
/// them into the running stats (running = m * running + (1 - m) * batch).
/// Inference mode uses the running stats and throws if none were recorded.
template <typename T>
Tensor<T> batchnorm_forward(const Tensor<T>& x, BatchNormParams<T>& p, BatchNormMode mode,
                            BatchNormCache<T>* cache = nullptr, double momentum = kBatchNormMomentum,
                            double eps = kBatchNormEps);

template <typename T>
struct BatchNormGrads {
  Tensor<T> input;
  Tensor<T> scale;
  Tensor<T> shift;
};

/// Backward of the training-mode forward.
template <typename T>
BatchNormGrads<T> batchnorm_backward(const Tensor<T>& grad_out, const BatchNormCache<T>& cache,
                                     const Tensor<T>& scale);

template <typename T>
Tensor<T> relu_forward(const Tensor<T>& x);
/// `output` is the forward result; gradient passes where output > 0.
template <typename T>
Tensor<T> relu_backward(const Tensor<T>& output, const Tensor<T>& grad_out);

template <typename T>
struct PoolResult {
  Tensor<T> output;
  std::vector<std::uint32_t> argmax;  // flat input offset per output element
};

/// 2x2 stride-2 max; ties keep the first element in row-major order.
template <typename T>
PoolResult<T> maxpool2_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> maxpool2_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax,
                            const Tensor<T>& grad_out);

/// Nearest-neighbor x2 upsampling; backward sums each 2x2 fan-out.
template <typename T>
Tensor<T> upsample2_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> upsample2_backward(const Tensor<T>& grad_out);

/// Per-pixel softmax across the channel axis.
template <typename T>
Tensor<T> softmax_channels_forward(const Tensor<T>& x);
template <typename T>
Tensor<T> softmax_channels_backward(const Tensor<T>& output, const Tensor<T>& grad_out);

namespace reference {

/// Six nested loops, single thread. Kept as the oracle for the parallel
/// convolution kernels and as the benchmark baseline.
template <typename T>
Tensor<T> conv2d_forward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& bias);
template <typename T>
ConvGrads<T> conv2d_backward(const Tensor<T>& x, const Tensor<T>& kernel, const Tensor<T>& grad_out);

}  // namespace reference

}  // namespace hdr::nn
