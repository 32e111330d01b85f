#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "errors.hpp"

namespace mum {

/**
 * Dense batch x channel x height x width array, row-major with w fastest.
 *
 * The library-wide carrier for images and feature maps is the float32
 * instantiation (Tensor4); the double instantiation exists so numerical
 * checks can run the same code paths at higher precision.
 */
template <typename T>
class TensorT {
 public:
  TensorT() = default;

  TensorT(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w)
      : n_(n), c_(c), h_(h), w_(w) {
    if (n <= 0 || c <= 0 || h <= 0 || w <= 0) {
      throw InvalidArgument("tensor dims must be positive, got (" + std::to_string(n) + ", " +
                            std::to_string(c) + ", " + std::to_string(h) + ", " +
                            std::to_string(w) + ")");
    }
    data_.assign(static_cast<std::size_t>(n * c * h * w), T{0});
  }

  std::int64_t n() const { return n_; }
  std::int64_t c() const { return c_; }
  std::int64_t h() const { return h_; }
  std::int64_t w() const { return w_; }
  std::int64_t size() const { return n_ * c_ * h_ * w_; }
  bool empty() const { return data_.empty(); }

  bool same_shape(const TensorT& o) const {
    return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_;
  }

  std::string shape_str() const {
    return "(" + std::to_string(n_) + ", " + std::to_string(c_) + ", " + std::to_string(h_) +
           ", " + std::to_string(w_) + ")";
  }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  T& at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) {
    return data_[static_cast<std::size_t>(((n * c_ + c) * h_ + h) * w_ + w)];
  }
  T at(std::int64_t n, std::int64_t c, std::int64_t h, std::int64_t w) const {
    return data_[static_cast<std::size_t>(((n * c_ + c) * h_ + h) * w_ + w)];
  }

  /// Pointer to the (n, c) plane, h*w contiguous values.
  T* plane(std::int64_t n, std::int64_t c) {
    return data_.data() + static_cast<std::size_t>((n * c_ + c) * h_ * w_);
  }
  const T* plane(std::int64_t n, std::int64_t c) const {
    return data_.data() + static_cast<std::size_t>((n * c_ + c) * h_ * w_);
  }

  void fill(T v) { data_.assign(data_.size(), v); }

  template <typename U>
  TensorT<U> cast() const {
    TensorT<U> out(n_, c_, h_, w_);
    for (std::int64_t i = 0; i < size(); ++i) out.data()[i] = static_cast<U>(data_[i]);
    return out;
  }

  bool operator==(const TensorT& o) const {
    return same_shape(o) && data_ == o.data_;
  }

 private:
  std::int64_t n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<T> data_;
};

using Tensor4 = TensorT<float>;

}  // namespace mum
