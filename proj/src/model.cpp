#include "hdrfuse/model.hpp"

#include <cmath>
#include <random>

namespace hdr {

std::size_t scale_channels(std::size_t channels, double width_multiplier) {
  const auto scaled = static_cast<std::size_t>(std::lround(static_cast<double>(channels) * width_multiplier));
  return std::max<std::size_t>(1, scaled);
}

std::vector<std::size_t> ModelConfig::encoder_channels() const {
  std::vector<std::size_t> out;
  for (std::size_t c : kEncoderChannels) out.push_back(scale_channels(c, width_multiplier));
  return out;
}

std::vector<std::size_t> ModelConfig::decoder_channels() const {
  std::vector<std::size_t> out;
  for (std::size_t c : kDecoderChannels) out.push_back(scale_channels(c, width_multiplier));
  return out;
}

void ModelConfig::validate() const {
  if (!(width_multiplier > 0.0 && width_multiplier <= 1.0)) {
    throw ContractError("width multiplier must lie in (0, 1]");
  }
  if (input_channels != 2 || output_channels != 2) {
    throw ContractError("the fusion network takes and emits exactly two exposures");
  }
}

namespace {

constexpr bool kPoolAfterEncoder[10] = {false, true, false, true, false, false, true, false, false, true};
constexpr bool kUpsampleBeforeDecoder[10] = {true, false, false, true, false, false, true, false, true, false};

double uniform01(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

template <typename T>
ConvParams<T> init_conv(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  ConvParams<T> p{nn::Tensor<T>({out, in, 3, 3}), nn::Tensor<T>({out})};
  // Kaiming-uniform, fan-in, ReLU gain.
  const double bound = std::sqrt(6.0 / static_cast<double>(in * 9));
  for (std::size_t i = 0; i < p.kernel.size(); ++i) {
    p.kernel[i] = static_cast<T>((2.0 * uniform01(rng) - 1.0) * bound);
  }
  return p;
}

template <typename T>
void accumulate(nn::Tensor<T>& param, const nn::Tensor<T>& grad) {
  auto g = param.grad();
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += grad[i];
}

}  // namespace

template <typename T>
std::vector<std::pair<std::string, nn::Tensor<T>*>> ModelParams<T>::named_tensors() {
  std::vector<std::pair<std::string, nn::Tensor<T>*>> out;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const std::string prefix = (i < 10 ? "enc" + std::to_string(i) : "dec" + std::to_string(i - 10)) + ".";
    auto& b = blocks[i];
    out.emplace_back(prefix + "conv.kernel", &b.conv.kernel);
    out.emplace_back(prefix + "conv.bias", &b.conv.bias);
    out.emplace_back(prefix + "bn.scale", &b.bn.scale);
    out.emplace_back(prefix + "bn.shift", &b.bn.shift);
    out.emplace_back(prefix + "bn.running_mean", &b.bn.running_mean);
    out.emplace_back(prefix + "bn.running_var", &b.bn.running_var);
  }
  out.emplace_back("head.conv.kernel", &head.kernel);
  out.emplace_back("head.conv.bias", &head.bias);
  return out;
}

template <typename T>
std::vector<std::pair<std::string, const nn::Tensor<T>*>> ModelParams<T>::named_tensors() const {
  auto mutable_list = const_cast<ModelParams<T>*>(this)->named_tensors();
  std::vector<std::pair<std::string, const nn::Tensor<T>*>> out;
  for (auto& [name, t] : mutable_list) out.emplace_back(std::move(name), t);
  return out;
}

template <typename T>
std::vector<nn::Tensor<T>*> ModelParams<T>::trainable() {
  std::vector<nn::Tensor<T>*> out;
  for (auto& b : blocks) {
    out.push_back(&b.conv.kernel);
    out.push_back(&b.conv.bias);
    out.push_back(&b.bn.scale);
    out.push_back(&b.bn.shift);
  }
  out.push_back(&head.kernel);
  out.push_back(&head.bias);
  return out;
}

template <typename T>
std::vector<nn::LayerSpec> ModelParams<T>::architecture() const {
  using nn::LayerKind;
  std::vector<nn::LayerSpec> out;
  for (const auto& b : blocks) {
    const auto in = static_cast<std::uint32_t>(b.conv.kernel.dim(1));
    const auto ch = static_cast<std::uint32_t>(b.conv.kernel.dim(0));
    if (b.upsample_before) out.push_back({LayerKind::Upsample2, in, in});
    out.push_back({LayerKind::Conv3x3, in, ch});
    out.push_back({LayerKind::BatchNorm, ch, ch});
    out.push_back({LayerKind::ReLU, ch, ch});
    if (b.pool_after) out.push_back({LayerKind::MaxPool2, ch, ch});
  }
  const auto hin = static_cast<std::uint32_t>(head.kernel.dim(1));
  const auto hout = static_cast<std::uint32_t>(head.kernel.dim(0));
  out.push_back({LayerKind::Conv3x3, hin, hout});
  out.push_back({LayerKind::Softmax, hout, hout});
  return out;
}

template <typename T>
std::uint64_t ModelParams<T>::batchnorm_updates() const {
  return blocks.empty() ? 0 : blocks.front().bn.updates;
}

template <typename T>
void ModelParams<T>::set_batchnorm_updates(std::uint64_t n) {
  for (auto& b : blocks) b.bn.updates = n;
}

template <typename T>
void ModelParams<T>::zero_grad() {
  for (auto* t : trainable()) t->zero_grad();
}

template <typename T>
ModelParams<T> build_model(const ModelConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  std::mt19937_64 rng(seed);
  ModelParams<T> p;
  p.config = cfg;
  const auto enc = cfg.encoder_channels();
  const auto dec = cfg.decoder_channels();
  std::size_t in = cfg.input_channels;
  for (std::size_t i = 0; i < 10; ++i) {
    ConvBlock<T> b;
    b.pool_after = kPoolAfterEncoder[i];
    b.conv = init_conv<T>(in, enc[i], rng);
    b.bn = nn::BatchNormParams<T>(enc[i]);
    p.blocks.push_back(std::move(b));
    in = enc[i];
  }
  for (std::size_t i = 0; i < 10; ++i) {
    ConvBlock<T> b;
    b.upsample_before = kUpsampleBeforeDecoder[i];
    b.conv = init_conv<T>(in, dec[i], rng);
    b.bn = nn::BatchNormParams<T>(dec[i]);
    p.blocks.push_back(std::move(b));
    in = dec[i];
  }
  p.head = init_conv<T>(in, cfg.output_channels, rng);
  return p;
}

template <typename T>
nn::Tensor<T> model_forward(ModelParams<T>& params, const nn::Tensor<T>& input, nn::BatchNormMode mode,
                            ForwardTrace<T>* trace) {
  if (input.rank() != 4 || input.dim(1) != params.config.input_channels) {
    throw ContractError("model input must be (N, 2, H, W), got " + nn::shape_string(input.shape()));
  }
  if (input.dim(2) % kSpatialMultiple != 0 || input.dim(3) % kSpatialMultiple != 0) {
    throw ContractError("model input spatial dims must be multiples of 16");
  }
  if (trace) {
    trace->blocks.clear();
    trace->blocks.resize(params.blocks.size());
  }
  nn::Tensor<T> x = input;
  for (std::size_t i = 0; i < params.blocks.size(); ++i) {
    auto& b = params.blocks[i];
    if (b.upsample_before) x = nn::upsample2_forward(x);
    nn::Tensor<T> z = nn::conv2d_forward(x, b.conv.kernel, b.conv.bias);
    nn::BatchNormCache<T>* cache = trace ? &trace->blocks[i].bn : nullptr;
    z = nn::batchnorm_forward(z, b.bn, mode, cache);
    nn::Tensor<T> a = nn::relu_forward(z);
    if (trace) trace->blocks[i].conv_input = std::move(x);
    if (b.pool_after) {
      auto pooled = nn::maxpool2_forward(a);
      if (trace) {
        trace->blocks[i].pool_input_shape = a.shape();
        trace->blocks[i].pool_argmax = std::move(pooled.argmax);
        trace->blocks[i].relu_output = std::move(a);
      }
      x = std::move(pooled.output);
    } else {
      if (trace) trace->blocks[i].relu_output = a;
      x = std::move(a);
    }
  }
  nn::Tensor<T> logits = nn::conv2d_forward(x, params.head.kernel, params.head.bias);
  nn::Tensor<T> weights = nn::softmax_channels_forward(logits);
  if (trace) {
    trace->head_input = std::move(x);
    trace->weights = weights;
  }
  return weights;
}

template <typename T>
nn::Tensor<T> model_infer(const ModelParams<T>& params, const nn::Tensor<T>& input) {
  // Inference-mode batch norm reads the running statistics only.
  return model_forward<T>(const_cast<ModelParams<T>&>(params), input, nn::BatchNormMode::Inference, nullptr);
}

template <typename T>
nn::Tensor<T> model_backward(ModelParams<T>& params, const ForwardTrace<T>& trace,
                             const nn::Tensor<T>& grad_weights) {
  if (trace.blocks.size() != params.blocks.size()) throw ContractError("trace does not match model");
  nn::Tensor<T> g = nn::softmax_channels_backward(trace.weights, grad_weights);
  {
    auto cg = nn::conv2d_backward(trace.head_input, params.head.kernel, g);
    accumulate(params.head.kernel, cg.kernel);
    accumulate(params.head.bias, cg.bias);
    g = std::move(cg.input);
  }
  for (std::size_t k = params.blocks.size(); k-- > 0;) {
    auto& b = params.blocks[k];
    const auto& t = trace.blocks[k];
    if (b.pool_after) g = nn::maxpool2_backward(t.pool_input_shape, t.pool_argmax, g);
    g = nn::relu_backward(t.relu_output, g);
    auto bg = nn::batchnorm_backward(g, t.bn, b.bn.scale);
    accumulate(b.bn.scale, bg.scale);
    accumulate(b.bn.shift, bg.shift);
    auto cg = nn::conv2d_backward(t.conv_input, b.conv.kernel, bg.input);
    accumulate(b.conv.kernel, cg.kernel);
    accumulate(b.conv.bias, cg.bias);
    g = std::move(cg.input);
    if (b.upsample_before) g = nn::upsample2_backward(g);
  }
  return g;
}

template <typename T>
nn::Tensor<T> make_model_input(const Image& under_gray, const Image& over_gray) {
  if (under_gray.channels() != 1 || over_gray.channels() != 1 || !under_gray.same_shape(over_gray)) {
    throw ContractError("model input needs two equally sized grayscale images");
  }
  const std::size_t h = round_up(under_gray.height(), kSpatialMultiple);
  const std::size_t w = round_up(under_gray.width(), kSpatialMultiple);
  const Image pu = reflect_pad(under_gray, h, w);
  const Image po = reflect_pad(over_gray, h, w);
  nn::Tensor<T> t({1, 2, h, w});
  const std::size_t plane = h * w;
  for (std::size_t i = 0; i < plane; ++i) {
    t[i] = static_cast<T>(pu.data()[i]);
    t[plane + i] = static_cast<T>(po.data()[i]);
  }
  return t;
}

template <typename T>
void calibrate_batchnorm(ModelParams<T>& params, const std::vector<ExposurePair>& inputs) {
  for (const auto& pair : inputs) {
    auto x = make_model_input<T>(to_grayscale(pair.under), to_grayscale(pair.over));
    model_forward<T>(params, x, nn::BatchNormMode::Training, nullptr);
  }
}

template <typename T>
WeightMap predict_weights(const ModelParams<T>& params, const ExposurePair& pair) {
  const Image ug = to_grayscale(pair.under);
  const Image og = to_grayscale(pair.over);
  const nn::Tensor<T> w = model_infer(params, make_model_input<T>(ug, og));
  const std::size_t h = ug.height(), wd = ug.width();
  const std::size_t pw = w.dim(3);
  WeightMap wm;
  wm.height = h;
  wm.width = wd;
  wm.weights.assign(2, PixelMap(h * wd));
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < wd; ++x) {
      const double a = w[y * pw + x];
      const double b = w[w.dim(2) * pw + y * pw + x];
      wm.weights[0][y * wd + x] = a / (a + b);
      wm.weights[1][y * wd + x] = b / (a + b);
    }
  }
  return wm;
}

template <typename T>
Image fuse_learned(const ModelParams<T>& params, const ExposurePair& pair) {
  const WeightMap wm = predict_weights(params, pair);
  const Image stack[] = {pair.under, pair.over};
  return fuse(std::span<const Image>(stack), wm);
}

#define HDR_INSTANTIATE_MODEL(T)                                                                          \
  template struct ModelParams<T>;                                                                         \
  template ModelParams<T> build_model(const ModelConfig&, std::uint64_t);                                 \
  template nn::Tensor<T> model_forward(ModelParams<T>&, const nn::Tensor<T>&, nn::BatchNormMode,          \
                                       ForwardTrace<T>*);                                                 \
  template nn::Tensor<T> model_infer(const ModelParams<T>&, const nn::Tensor<T>&);                        \
  template nn::Tensor<T> model_backward(ModelParams<T>&, const ForwardTrace<T>&, const nn::Tensor<T>&);   \
  template nn::Tensor<T> make_model_input(const Image&, const Image&);                                    \
  template void calibrate_batchnorm(ModelParams<T>&, const std::vector<ExposurePair>&);                   \
  template WeightMap predict_weights(const ModelParams<T>&, const ExposurePair&);                         \
  template Image fuse_learned(const ModelParams<T>&, const ExposurePair&);

HDR_INSTANTIATE_MODEL(float)
HDR_INSTANTIATE_MODEL(double)

}  // namespace hdr
