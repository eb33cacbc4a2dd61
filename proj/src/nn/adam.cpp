#include "hdrfuse/nn/adam.hpp"

#include <cmath>

#include "hdrfuse/image.hpp"

namespace hdr::nn {

double decayed_lr(const AdamConfig& cfg, std::size_t epoch) {
  return cfg.lr0 * std::pow(cfg.decay, static_cast<double>(epoch));
}

template <typename T>
void AdamState<T>::update(Tensor<T>& param, std::span<const T> grad, std::size_t slot, double c1, double c2) {
  auto& m = m_[slot];
  auto& v = v_[slot];
  if (m.empty()) {
    m.assign(param.size(), 0.0);
    v.assign(param.size(), 0.0);
  }
  if (m.size() != param.size() || (!grad.empty() && grad.size() != param.size())) {
    throw ContractError("adam parameter/gradient shape mismatch");
  }
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad.empty() ? 0.0 : static_cast<double>(grad[i]);
    m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * g;
    v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * g * g;
    const double mhat = m[i] / c1;
    const double vhat = v[i] / c2;
    param[i] = static_cast<T>(param[i] - lr_ * mhat / (std::sqrt(vhat) + cfg_.eps));
  }
}

template <typename T>
void AdamState<T>::step(const std::vector<Tensor<T>*>& params) {
  std::vector<const Tensor<T>*> none;
  ++step_;
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
  }
  if (m_.size() != params.size()) throw ContractError("adam parameter count changed between steps");
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t s = 0; s < params.size(); ++s) {
    Tensor<T>& p = *params[s];
    update(p, p.has_grad() ? std::as_const(p).grad() : std::span<const T>{}, s, c1, c2);
  }
}

template <typename T>
void AdamState<T>::step(const std::vector<Tensor<T>*>& params, const std::vector<const Tensor<T>*>& grads) {
  if (grads.size() != params.size()) throw ContractError("adam parameter/gradient count mismatch");
  ++step_;
  if (m_.empty()) {
    m_.resize(params.size());
    v_.resize(params.size());
  }
  if (m_.size() != params.size()) throw ContractError("adam parameter count changed between steps");
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(step_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(step_));
  for (std::size_t s = 0; s < params.size(); ++s) {
    if (grads[s]->shape() != params[s]->shape()) throw ContractError("adam gradient shape mismatch");
    update(*params[s], grads[s]->values(), s, c1, c2);
  }
}

template class AdamState<float>;
template class AdamState<double>;

}  // namespace hdr::nn
