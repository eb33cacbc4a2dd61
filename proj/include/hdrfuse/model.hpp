#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "hdrfuse/classical_mef.hpp"
#include "hdrfuse/image.hpp"
#include "hdrfuse/nn/layers.hpp"
#include "hdrfuse/nn/tensor.hpp"

namespace hdr {

inline constexpr std::size_t kEncoderChannels[10] = {64, 64, 128, 128, 256, 256, 256, 512, 512, 512};
inline constexpr std::size_t kDecoderChannels[10] = {512, 512, 512, 256, 256, 256, 128, 128, 64, 64};
inline constexpr std::size_t kPoolCount = 4;
inline constexpr std::size_t kSpatialMultiple = std::size_t{1} << kPoolCount;

struct ModelConfig {
  double width_multiplier = 1.0 / 16.0;
  std::size_t input_channels = 2;
  std::size_t output_channels = 2;

  std::vector<std::size_t> encoder_channels() const;
  std::vector<std::size_t> decoder_channels() const;
  void validate() const;
};

/// Scaled channel count: round(c * m), at least 1.
std::size_t scale_channels(std::size_t channels, double width_multiplier);

template <typename T>
struct ConvParams {
  nn::Tensor<T> kernel;
  nn::Tensor<T> bias;
};

/// conv3x3 -> batch norm -> ReLU, with an optional 2x upsample before or a
/// 2x2 max-pool after.
template <typename T>
struct ConvBlock {
  bool upsample_before = false;
  bool pool_after = false;
  ConvParams<T> conv;
  nn::BatchNormParams<T> bn;
};

/// Encoder-decoder weight-map network. Ten encoder blocks pool after blocks
/// 2, 4, 7 and 10; ten decoder blocks upsample before blocks 1, 4, 7 and 9;
/// a final 3x3 conv emits one logit per exposure for the channel softmax.
template <typename T>
struct ModelParams {
  ModelConfig config;
  std::vector<ConvBlock<T>> blocks;  // encoder then decoder
  ConvParams<T> head;

  /// Every tensor in declaration order with its stable name.
  std::vector<std::pair<std::string, nn::Tensor<T>*>> named_tensors();
  std::vector<std::pair<std::string, const nn::Tensor<T>*>> named_tensors() const;

  /// Trainable tensors (conv kernels/biases, batch-norm scale/shift).
  std::vector<nn::Tensor<T>*> trainable();

  /// Layer list for the checkpoint architecture descriptor.
  std::vector<nn::LayerSpec> architecture() const;

  std::uint64_t batchnorm_updates() const;
  void set_batchnorm_updates(std::uint64_t n);
  void zero_grad();
};

template <typename T>
ModelParams<T> build_model(const ModelConfig& cfg, std::uint64_t seed);

/// Activations retained by a forward pass for the backward pass.
template <typename T>
struct ForwardTrace {
  struct Block {
    nn::Tensor<T> conv_input;
    nn::BatchNormCache<T> bn;
    nn::Tensor<T> relu_output;
    nn::Shape pool_input_shape;
    std::vector<std::uint32_t> pool_argmax;
  };
  std::vector<Block> blocks;
  nn::Tensor<T> head_input;
  nn::Tensor<T> weights;  // softmax output
};

/// input: (N, 2, H, W) with H, W multiples of 16. Returns the (N, 2, H, W)
/// softmax weights. In training mode batch-norm running stats are updated.
template <typename T>
nn::Tensor<T> model_forward(ModelParams<T>& params, const nn::Tensor<T>& input, nn::BatchNormMode mode,
                            ForwardTrace<T>* trace = nullptr);

/// Inference-mode forward; never modifies `params`.
template <typename T>
nn::Tensor<T> model_infer(const ModelParams<T>& params, const nn::Tensor<T>& input);

/// Accumulates parameter gradients given dL/dweights; returns dL/dinput.
template <typename T>
nn::Tensor<T> model_backward(ModelParams<T>& params, const ForwardTrace<T>& trace,
                             const nn::Tensor<T>& grad_weights);

/// Stacks the grayscale exposures as a (1, 2, H', W') tensor, reflect-padded
/// so H', W' are multiples of 16.
template <typename T>
nn::Tensor<T> make_model_input(const Image& under_gray, const Image& over_gray);

/// Runs training-mode forward passes over `inputs` to populate batch-norm
/// running statistics without touching trainable parameters.
template <typename T>
void calibrate_batchnorm(ModelParams<T>& params, const std::vector<ExposurePair>& inputs);

/// Inference-mode weight maps at the pair's full resolution.
template <typename T>
WeightMap predict_weights(const ModelParams<T>& params, const ExposurePair& pair);

/// Applies the predicted weights to the color exposures.
template <typename T>
Image fuse_learned(const ModelParams<T>& params, const ExposurePair& pair);

}  // namespace hdr
