#include "hdrfuse/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <random>

#include "hdrfuse/checkpoint.hpp"
#include "hdrfuse/nn/adam.hpp"
#include "hdrfuse/parallel.hpp"

namespace hdr {

void TrainConfig::validate() const {
  if (patch_size == 0) throw ContractError("patch_size must be positive");
  if (batch_size == 0) throw ContractError("batch_size must be positive");
  if (epochs == 0) throw ContractError("epochs must be positive");
  if (!(lr0 > 0.0)) throw ContractError("lr0 must be positive");
  if (!(lr_decay > 0.0)) throw ContractError("lr_decay must be positive");
  if (!(width_multiplier > 0.0 && width_multiplier <= 1.0)) throw ContractError("width_multiplier must lie in (0,1]");
}

std::string format_log_line(const EpochLog& log) {
  char buf[128];
  std::snprintf(buf, sizeof buf, "%zu\t%.6f\t%.6e\t%.0f", log.epoch, log.mean_loss, log.lr, log.wall_ms);
  return buf;
}

namespace {

template <typename T>
struct TrainSample {
  ExposurePair color;      // patch_size x patch_size
  nn::Tensor<T> input;     // (1, 2, P', P') padded grayscale stack
  GammaMap gamma;
};

template <typename T>
std::vector<TrainSample<T>> make_samples(const std::vector<ExposurePair>& corpus, const TrainConfig& tc,
                                         const LossConfig& lc) {
  std::vector<TrainSample<T>> samples;
  const std::size_t stride = tc.patch_stride == 0 ? tc.patch_size : tc.patch_stride;
  for (const auto& pair : corpus) {
    const PatchGrid grid = extract_patches(pair.under, tc.patch_size, stride);
    for (const auto& a : grid.patches) {
      TrainSample<T> s;
      s.color.under = crop(pair.under, a.row, a.col, tc.patch_size, tc.patch_size);
      s.color.over = crop(pair.over, a.row, a.col, tc.patch_size, tc.patch_size);
      s.input = make_model_input<T>(to_grayscale(s.color.under), to_grayscale(s.color.over));
      s.gamma = compute_gamma(s.color, lc);
      samples.push_back(std::move(s));
    }
  }
  return samples;
}

// Fisher-Yates with a fixed bounded-integer rule so the order depends only on
// the seed.
void shuffle(std::vector<std::size_t>& order, std::mt19937_64& rng) {
  for (std::size_t i = order.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(order[i - 1], order[j]);
  }
}

}  // namespace

template <typename T>
double weight_map_loss(const ExposurePair& pair, const GammaMap& gamma, const LossConfig& lc,
                       const nn::Tensor<T>& weights, std::size_t item, nn::Tensor<T>* grad_weights,
                       double grad_scale) {
  const std::size_t h = pair.under.height(), w = pair.under.width(), ch = pair.under.channels();
  if (weights.rank() != 4) throw ContractError("weight tensor must be rank 4");
  const std::size_t ph = weights.dim(2), pw = weights.dim(3);
  if (weights.dim(1) != 2 || item >= weights.dim(0) || ph < h || pw < w) {
    throw ContractError("weight tensor does not cover the exposure pair");
  }
  const std::size_t plane = ph * pw;
  const T* w0 = weights.data() + item * 2 * plane;
  const T* w1 = w0 + plane;
  auto u = pair.under.data();
  auto o = pair.over.data();
  std::vector<double> fused(h * w * ch);
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      const double a = w0[y * pw + x];
      const double b = w1[y * pw + x];
      for (std::size_t c = 0; c < ch; ++c) {
        const std::size_t k = (y * w + x) * ch + c;
        fused[k] = a * u[k] + b * o[k];
      }
    }
  }
  const LossResult lr = weighted_ssim_loss(pair, fused, gamma, lc);
  if (grad_weights) {
    if (grad_weights->shape() != weights.shape()) throw ContractError("weight gradient shape mismatch");
    T* g0 = grad_weights->data() + item * 2 * plane;
    T* g1 = g0 + plane;
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double da = 0.0, db = 0.0;
        for (std::size_t c = 0; c < ch; ++c) {
          const std::size_t k = (y * w + x) * ch + c;
          da += lr.grad[k] * u[k];
          db += lr.grad[k] * o[k];
        }
        g0[y * pw + x] = static_cast<T>(da * grad_scale);
        g1[y * pw + x] = static_cast<T>(db * grad_scale);
      }
    }
  }
  return lr.loss;
}

template <typename T>
TrainResult<T> train(const std::vector<ExposurePair>& corpus, const TrainConfig& tc, const LossConfig& lc,
                     const std::filesystem::path& checkpoint,
                     const std::function<void(const EpochLog&)>& on_epoch) {
  tc.validate();
  if (corpus.empty()) throw ContractError("training corpus is empty");
  if (lc.window.window_size > tc.patch_size) throw ContractError("training patch smaller than the loss window");
  if (tc.deterministic) set_deterministic(true);

  ModelConfig mc;
  mc.width_multiplier = tc.width_multiplier;
  TrainResult<T> result{build_model<T>(mc, tc.seed), {}, {}, 0.0};
  ModelParams<T>& model = result.model;

  const auto samples = make_samples<T>(corpus, tc, lc);
  const std::size_t padded = samples.front().input.dim(2);
  const std::size_t plane = padded * padded;

  nn::AdamConfig ac;
  ac.lr0 = tc.lr0;
  ac.decay = tc.lr_decay;
  nn::AdamState<T> adam(ac);
  auto params = model.trainable();

  std::mt19937_64 rng(tc.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(samples.size());
  std::size_t iteration = 0;
  bool capped = false;

  for (std::size_t epoch = 0; epoch < tc.epochs && !capped; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    adam.set_epoch(epoch);
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    shuffle(order, rng);

    double loss_sum = 0.0;
    std::size_t loss_count = 0;
    for (std::size_t start = 0; start < order.size(); start += tc.batch_size) {
      if (tc.max_iterations != 0 && iteration >= tc.max_iterations) {
        capped = true;
        break;
      }
      const std::size_t bsz = std::min(tc.batch_size, order.size() - start);
      nn::Tensor<T> input({bsz, 2, padded, padded});
      for (std::size_t b = 0; b < bsz; ++b) {
        const auto& src = samples[order[start + b]].input;
        std::copy(src.data(), src.data() + 2 * plane, input.data() + b * 2 * plane);
      }

      ForwardTrace<T> trace;
      const nn::Tensor<T> weights = model_forward(model, input, nn::BatchNormMode::Training, &trace);
      nn::Tensor<T> grad_w(weights.shape());
      double batch_loss = 0.0;
      const double scale = 1.0 / static_cast<double>(bsz);
      for (std::size_t b = 0; b < bsz; ++b) {
        const TrainSample<T>& s = samples[order[start + b]];
        batch_loss += weight_map_loss(s.color, s.gamma, lc, weights, b, &grad_w, scale);
      }
      model.zero_grad();
      model_backward(model, trace, grad_w);
      adam.step(params);
      ++iteration;
      result.iteration_losses.push_back(batch_loss / static_cast<double>(bsz));
      loss_sum += batch_loss;
      loss_count += bsz;
    }
    if (loss_count == 0) break;

    EpochLog log;
    log.epoch = epoch + 1;
    log.mean_loss = loss_sum / static_cast<double>(loss_count);
    log.lr = adam.lr();
    log.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);
    result.final_loss = log.mean_loss;
    if (!checkpoint.empty()) save_checkpoint(model, checkpoint);
    if (on_epoch) on_epoch(log);
  }
  return result;
}

template double weight_map_loss(const ExposurePair&, const GammaMap&, const LossConfig&, const nn::Tensor<float>&,
                                std::size_t, nn::Tensor<float>*, double);
template double weight_map_loss(const ExposurePair&, const GammaMap&, const LossConfig&, const nn::Tensor<double>&,
                                std::size_t, nn::Tensor<double>*, double);
template TrainResult<float> train<float>(const std::vector<ExposurePair>&, const TrainConfig&, const LossConfig&,
                                         const std::filesystem::path&, const std::function<void(const EpochLog&)>&);
template TrainResult<double> train<double>(const std::vector<ExposurePair>&, const TrainConfig&, const LossConfig&,
                                           const std::filesystem::path&, const std::function<void(const EpochLog&)>&);

ExposurePair Scene::pair() const {
  if (exposures.size() < 2) throw ContractError("scene " + name + " has fewer than two exposures");
  return ExposurePair(exposures.front(), exposures.back());
}

namespace {

bool is_image_file(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return ext == ".png" || ext == ".ppm" || ext == ".pgm";
}

std::filesystem::path find_stem(const std::filesystem::path& dir, const std::string& stem) {
  for (const char* ext : {".png", ".ppm", ".pgm"}) {
    auto p = dir / (stem + ext);
    if (std::filesystem::exists(p)) return p;
  }
  return {};
}

}  // namespace

bool is_scene_directory(const std::filesystem::path& dir) {
  return std::filesystem::is_directory(dir) && !find_stem(dir, "under").empty() && !find_stem(dir, "over").empty();
}

Scene load_scene(const std::filesystem::path& dir) {
  const auto under = find_stem(dir, "under");
  const auto over = find_stem(dir, "over");
  if (under.empty() || over.empty()) throw IoError("scene directory lacks under/over images: " + dir.string());
  Scene s;
  s.name = dir.filename().string();
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(dir)) {
    if (e.is_regular_file() && is_image_file(e.path())) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    Image img = load_image(f);
    if (!s.exposures.empty() && !img.same_shape(s.exposures.front())) {
      throw ContractError("exposures in " + dir.string() + " differ in shape");
    }
    s.exposures.push_back(std::move(img));
  }
  std::stable_sort(s.exposures.begin(), s.exposures.end(),
                   [](const Image& a, const Image& b) { return a.mean() < b.mean(); });
  return s;
}

std::vector<Scene> load_scene_directory(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) throw IoError("not a directory: " + root.string());
  std::vector<std::filesystem::path> dirs;
  for (const auto& e : std::filesystem::directory_iterator(root)) {
    if (is_scene_directory(e.path())) {
      dirs.push_back(e.path());
    }
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<Scene> scenes;
  for (const auto& d : dirs) scenes.push_back(load_scene(d));
  if (scenes.empty()) throw IoError("no scene directories under " + root.string());
  return scenes;
}

}  // namespace hdr
