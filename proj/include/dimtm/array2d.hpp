#pragma once

#include <algorithm>
#include <cassert>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace dimtm {

/// Dense row-major 2D array. The workhorse container for image planes,
/// kernels and similarity maps.
template <typename T>
class Array2D {
 public:
  Array2D() = default;
  Array2D(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(size_t(width) * height, fill) {
    if (width < 1 || height < 1) throw std::invalid_argument("Array2D: dims must be >= 1");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T& operator()(int y, int x) {
    assert(in_bounds(x, y));
    return data_[size_t(y) * width_ + x];
  }
  const T& operator()(int y, int x) const {
    assert(in_bounds(x, y));
    return data_[size_t(y) * width_ + x];
  }

  T* row(int y) { return data_.data() + size_t(y) * width_; }
  const T* row(int y) const { return data_.data() + size_t(y) * width_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }
  bool same_dims(const Array2D& o) const { return width_ == o.width_ && height_ == o.height_; }

  void fill(T v) { std::fill(data_.begin(), data_.end(), v); }

  T max_value() const { return *std::max_element(data_.begin(), data_.end()); }
  T min_value() const { return *std::min_element(data_.begin(), data_.end()); }

  T sum() const {
    T s{};
    for (const T& v : data_) s += v;
    return s;
  }

  auto begin() { return data_.begin(); }
  auto end() { return data_.end(); }
  auto begin() const { return data_.begin(); }
  auto end() const { return data_.end(); }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using Plane = Array2D<double>;

/// Kernels are plain planes; dims and finiteness are checked at use sites.
using Kernel2D = Plane;

inline Plane rot180(const Plane& k) {
  Plane out(k.width(), k.height());
  for (int y = 0; y < k.height(); ++y)
    for (int x = 0; x < k.width(); ++x)
      out(y, x) = k(k.height() - 1 - y, k.width() - 1 - x);
  return out;
}

}  // namespace dimtm
