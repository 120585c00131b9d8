#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sensprune/errors.h"

namespace sensprune {

struct Shape4 {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(n) * c * h * w;
  }
  std::size_t per_sample() const { return static_cast<std::size_t>(c) * h * w; }
  friend bool operator==(const Shape4&, const Shape4&) = default;
};

std::string to_string(const Shape4& s);

// Dense NCHW tensor. Storage is contiguous and row-major. Networks use the
// float instantiation; the double one exists so gradient checks can run the
// same layer kernels in 64-bit.
template <typename T>
class BasicTensor4 {
 public:
  using value_type = T;

  BasicTensor4() = default;
  explicit BasicTensor4(Shape4 shape, T fill = T(0))
      : shape_(shape), data_(shape.count(), fill) {}
  BasicTensor4(Shape4 shape, std::vector<T> data)
      : shape_(shape), data_(std::move(data)) {
    if (data_.size() != shape_.count()) {
      throw ConfigError("tensor data length " + std::to_string(data_.size()) +
                        " does not match shape " + to_string(shape_));
    }
  }

  const Shape4& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }

  std::span<T> data() { return data_; }
  std::span<const T> data() const { return data_; }
  T* raw() { return data_.data(); }
  const T* raw() const { return data_.data(); }
  std::vector<T>& storage() { return data_; }
  const std::vector<T>& storage() const { return data_; }

  T& at(int n, int c, int h, int w) { return data_[index(n, c, h, w)]; }
  T at(int n, int c, int h, int w) const { return data_[index(n, c, h, w)]; }

  std::span<T> sample(int n) {
    return std::span<T>(data_).subspan(n * shape_.per_sample(), shape_.per_sample());
  }
  std::span<const T> sample(int n) const {
    return std::span<const T>(data_).subspan(n * shape_.per_sample(),
                                             shape_.per_sample());
  }

  // Reinterpret with a new shape of equal element count.
  void reshape(Shape4 shape) {
    if (shape.count() != data_.size()) {
      throw ConfigError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    shape_ = shape;
  }

  // Resize and zero-fill.
  void reset(Shape4 shape) {
    shape_ = shape;
    data_.assign(shape.count(), T(0));
  }

  // Resize keeping the allocation; contents are unspecified afterwards.
  void resize(Shape4 shape) {
    shape_ = shape;
    data_.resize(shape.count());
  }

  bool all_finite() const {
    for (T v : data_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

 private:
  std::size_t index(int n, int c, int h, int w) const {
    return ((static_cast<std::size_t>(n) * shape_.c + c) * shape_.h + h) * shape_.w + w;
  }

  Shape4 shape_;
  std::vector<T> data_;
};

using Tensor4 = BasicTensor4<float>;

}  // namespace sensprune
