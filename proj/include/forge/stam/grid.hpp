#pragma once

#include <cmath>
#include <concepts>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace forge::stam {

/// Dense row-major [t, h, w, d] feature tensor.
template <std::floating_point T>
class FeatureGrid {
 public:
  using value_type = T;

  FeatureGrid() = default;
  FeatureGrid(std::size_t t, std::size_t h, std::size_t w, std::size_t d, T fill = T(0))
      : t_(t), h_(h), w_(w), d_(d), data_(t * h * w * d, fill) {
    if (t == 0 || h == 0 || w == 0 || d == 0) {
      throw std::invalid_argument("FeatureGrid: dimensions must be positive");
    }
  }

  std::size_t t() const { return t_; }
  std::size_t h() const { return h_; }
  std::size_t w() const { return w_; }
  std::size_t d() const { return d_; }
  std::size_t size() const { return data_.size(); }

  T& operator()(std::size_t t, std::size_t y, std::size_t x, std::size_t c) {
    return data_[((t * h_ + y) * w_ + x) * d_ + c];
  }
  T operator()(std::size_t t, std::size_t y, std::size_t x, std::size_t c) const {
    return data_[((t * h_ + y) * w_ + x) * d_ + c];
  }

  /// Pointer to the d-vector of token (t, y, x).
  T* token(std::size_t t, std::size_t y, std::size_t x) { return &data_[((t * h_ + y) * w_ + x) * d_]; }
  const T* token(std::size_t t, std::size_t y, std::size_t x) const {
    return &data_[((t * h_ + y) * w_ + x) * d_];
  }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const FeatureGrid& o) const {
    return t_ == o.t_ && h_ == o.h_ && w_ == o.w_ && d_ == o.d_;
  }

  bool all_finite() const {
    for (T v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  std::string shape_string() const {
    return "[" + std::to_string(t_) + "," + std::to_string(h_) + "," + std::to_string(w_) + "," +
           std::to_string(d_) + "]";
  }

  friend bool operator==(const FeatureGrid&, const FeatureGrid&) = default;

 private:
  std::size_t t_ = 0, h_ = 0, w_ = 0, d_ = 0;
  std::vector<T> data_;
};

/// Dense row-major [t, h, w] scalar field; used for importance and discrepancy maps.
template <std::floating_point T>
class FrameMaps {
 public:
  FrameMaps() = default;
  FrameMaps(std::size_t t, std::size_t h, std::size_t w, T fill = T(0))
      : t_(t), h_(h), w_(w), data_(t * h * w, fill) {}

  std::size_t t() const { return t_; }
  std::size_t h() const { return h_; }
  std::size_t w() const { return w_; }
  std::size_t frame_size() const { return h_ * w_; }

  T& operator()(std::size_t t, std::size_t y, std::size_t x) { return data_[(t * h_ + y) * w_ + x]; }
  T operator()(std::size_t t, std::size_t y, std::size_t x) const { return data_[(t * h_ + y) * w_ + x]; }

  T* frame(std::size_t t) { return &data_[t * h_ * w_]; }
  const T* frame(std::size_t t) const { return &data_[t * h_ * w_]; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  bool same_shape(const FrameMaps& o) const { return t_ == o.t_ && h_ == o.h_ && w_ == o.w_; }

  friend bool operator==(const FrameMaps&, const FrameMaps&) = default;

 private:
  std::size_t t_ = 0, h_ = 0, w_ = 0;
  std::vector<T> data_;
};

/// RGB and event features on one shared [T_c, H_c, W_c, D] lattice.
template <std::floating_point T>
struct AlignedPair {
  FeatureGrid<T> rgb;
  FeatureGrid<T> event;

  void check() const {
    if (!rgb.same_shape(event)) {
      throw std::invalid_argument("AlignedPair: shape mismatch " + rgb.shape_string() + " vs " +
                                  event.shape_string());
    }
  }
};

/// Plain [h, w, c] image used as encoder input.
template <std::floating_point T>
struct Image {
  std::size_t h = 0, w = 0, c = 0;
  std::vector<T> data;

  Image() = default;
  Image(std::size_t h_, std::size_t w_, std::size_t c_, T fill = T(0))
      : h(h_), w(w_), c(c_), data(h_ * w_ * c_, fill) {}

  T& operator()(std::size_t y, std::size_t x, std::size_t ch) { return data[(y * w + x) * c + ch]; }
  T operator()(std::size_t y, std::size_t x, std::size_t ch) const { return data[(y * w + x) * c + ch]; }
};

}  // namespace forge::stam
