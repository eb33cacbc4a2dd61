#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace hdr::nn {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array with an optional same-shape gradient buffer. Rank-4
/// tensors are laid out as (batch, channels, height, width).
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor() = default;
  explicit Tensor(Shape shape, T fill = T(0));
  Tensor(Shape shape, std::vector<T> values);

  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t dim(std::size_t i) const { return shape_[i]; }
  std::size_t size() const { return values_.size(); }

  std::span<T> values() { return values_; }
  std::span<const T> values() const { return values_; }
  T* data() { return values_.data(); }
  const T* data() const { return values_.data(); }

  T& operator[](std::size_t i) { return values_[i]; }
  const T& operator[](std::size_t i) const { return values_[i]; }

  /// Rank-4 element access.
  T& at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) {
    return values_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }
  T at(std::size_t n, std::size_t c, std::size_t y, std::size_t x) const {
    return values_[((n * shape_[1] + c) * shape_[2] + y) * shape_[3] + x];
  }

  bool has_grad() const { return !grad_.empty(); }
  /// Allocates a zeroed gradient buffer on first use.
  std::span<T> grad();
  std::span<const T> grad() const { return grad_; }
  void zero_grad();

  void fill(T v);

 private:
  Shape shape_;
  std::vector<T> values_;
  std::vector<T> grad_;
};

extern template class Tensor<float>;
extern template class Tensor<double>;

template <typename To, typename From>
Tensor<To> tensor_cast(const Tensor<From>& src) {
  std::vector<To> v(src.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<To>(src[i]);
  return Tensor<To>(src.shape(), std::move(v));
}

}  // namespace hdr::nn
