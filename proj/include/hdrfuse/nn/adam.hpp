#pragma once

#include <cstddef>
#include <vector>

#include "hdrfuse/nn/tensor.hpp"

namespace hdr::nn {

struct AdamConfig {
  double lr0 = 1e-4;
  double decay = 0.99;  // per-epoch multiplier
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// Learning rate after `epoch` completed epochs: lr0 * decay^epoch.
double decayed_lr(const AdamConfig& cfg, std::size_t epoch);

/// Bias-corrected Adam with one moment pair per parameter tensor.
template <typename T>
class AdamState {
 public:
  explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg), lr_(cfg.lr0) {}

  /// Updates every parameter from its gradient buffer. Parameters without a
  /// gradient buffer are treated as having zero gradient.
  void step(const std::vector<Tensor<T>*>& params);

  /// Same update with gradients supplied separately.
  void step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads);

  void set_epoch(std::size_t epoch) { lr_ = decayed_lr(cfg_, epoch); }
  double lr() const { return lr_; }
  std::size_t steps() const { return step_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  void update(Tensor<T>& param, std::span<const T> grad, std::size_t slot, double c1, double c2);

  AdamConfig cfg_;
  double lr_;
  std::size_t step_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

extern template class AdamState<float>;
extern template class AdamState<double>;

}  // namespace hdr::nn
