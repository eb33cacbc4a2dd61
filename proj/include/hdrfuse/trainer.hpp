#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "hdrfuse/loss.hpp"
#include "hdrfuse/model.hpp"

namespace hdr {

struct TrainConfig {
  std::size_t patch_size = 250;
  std::size_t patch_stride = 0;  // 0: non-overlapping (stride = patch_size)
  std::size_t batch_size = 64;
  double lr0 = 1e-4;
  double lr_decay = 0.99;
  std::size_t epochs = 1;
  std::uint64_t seed = 0;
  double width_multiplier = 1.0 / 16.0;
  std::size_t max_iterations = 0;  // 0: no cap
  bool deterministic = false;

  void validate() const;
};

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double mean_loss = 0.0;
  double lr = 0.0;
  double wall_ms = 0.0;
};

/// "epoch\tmean_loss\tlr\twall_ms"
std::string format_log_line(const EpochLog& log);

template <typename T>
struct TrainResult {
  ModelParams<T> model;
  std::vector<EpochLog> log;
  std::vector<double> iteration_losses;  // mean batch loss per optimizer step
  double final_loss = 0.0;               // mean loss of the last epoch
};

/// Loss of the fusion obtained by applying item `item` of a (N, 2, H', W')
/// weight tensor to `pair` (the top-left H x W region is used). When
/// `grad_weights` is given, dL/dweights times `grad_scale` is written into that
/// item's slice; padding positions are left untouched.
template <typename T>
double weight_map_loss(const ExposurePair& pair, const GammaMap& gamma, const LossConfig& lc,
                       const nn::Tensor<T>& weights, std::size_t item, nn::Tensor<T>* grad_weights = nullptr,
                       double grad_scale = 1.0);

/// Patch-based unsupervised training: shuffled batches of grayscale inputs
/// through the network, weighted-SSIM loss on the color fusion, Adam with
/// per-epoch learning-rate decay. When `checkpoint` is non-empty the model is
/// saved there after every epoch.
template <typename T = float>
TrainResult<T> train(const std::vector<ExposurePair>& corpus, const TrainConfig& tc, const LossConfig& lc,
                     const std::filesystem::path& checkpoint = {},
                     const std::function<void(const EpochLog&)>& on_epoch = {});

struct Scene {
  std::string name;
  std::vector<Image> exposures;  // ordered by mean intensity, darkest first
  ExposurePair pair() const;     // darkest and brightest
};

/// A scene directory holds under.{png,ppm} and over.{png,ppm}, optionally
/// with further exposures in any supported image file.
bool is_scene_directory(const std::filesystem::path& dir);
Scene load_scene(const std::filesystem::path& dir);

/// Every subdirectory of `root` that contains an under/over pair, by name.
std::vector<Scene> load_scene_directory(const std::filesystem::path& root);

}  // namespace hdr
