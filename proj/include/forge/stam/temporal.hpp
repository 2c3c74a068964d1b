#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <vector>

#include "forge/stam/grid.hpp"
#include "forge/stam/random.hpp"

namespace forge::stam {

/// Multi-scale depthwise 1D convolution along t, one branch per odd kernel size, with the
/// branch outputs concatenated on channels and projected back to d.
template <std::floating_point T>
class TemporalConv {
 public:
  /// `taps[b]` is row-major [d][k_b]; `projection` is row-major [d][branches * d].
  TemporalConv(std::size_t d, std::vector<std::size_t> kernel_sizes, std::vector<std::vector<T>> taps,
               std::vector<T> projection)
      : d_(d), kernels_(std::move(kernel_sizes)), taps_(std::move(taps)), projection_(std::move(projection)) {
    validate();
  }

  /// Centre-tap kernels and an averaged identity projection, each perturbed by
  /// uniform noise of amplitude `noise` drawn from `seed`.
  static TemporalConv initialized(std::size_t d, std::vector<std::size_t> kernel_sizes = {1, 3},
                                  std::uint64_t seed = 17, double noise = 0.01) {
    check_kernels(kernel_sizes);
    SeededUniform draw(seed);
    const std::size_t nb = kernel_sizes.size();
    std::vector<std::vector<T>> taps;
    for (std::size_t k : kernel_sizes) {
      std::vector<T> branch(d * k);
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t j = 0; j < k; ++j)
          branch[c * k + j] = static_cast<T>((j == k / 2 ? 1.0 : 0.0) + noise * draw());
      taps.push_back(std::move(branch));
    }
    std::vector<T> proj(d * nb * d);
    for (std::size_t o = 0; o < d; ++o)
      for (std::size_t j = 0; j < nb * d; ++j)
        proj[o * nb * d + j] = static_cast<T>((j % d == o ? 1.0 / nb : 0.0) + noise * draw());
    return TemporalConv(d, std::move(kernel_sizes), std::move(taps), std::move(proj));
  }

  /// Noise-free version of `initialized`.
  static TemporalConv identity(std::size_t d, std::vector<std::size_t> kernel_sizes = {1}) {
    return initialized(d, std::move(kernel_sizes), 0, 0.0);
  }

  std::size_t channels() const { return d_; }
  const std::vector<std::size_t>& kernel_sizes() const { return kernels_; }
  const std::vector<std::vector<T>>& taps() const { return taps_; }
  const std::vector<T>& projection() const { return projection_; }

  FeatureGrid<T> operator()(const FeatureGrid<T>& f) const {
    if (f.d() != d_) throw std::invalid_argument("TemporalConv: channel mismatch");
    const std::size_t nb = kernels_.size();
    const std::size_t tn = f.t();
    FeatureGrid<T> out(tn, f.h(), f.w(), d_);
    std::vector<T> concat(nb * d_);
    for (std::size_t t = 0; t < tn; ++t) {
      for (std::size_t y = 0; y < f.h(); ++y) {
        for (std::size_t x = 0; x < f.w(); ++x) {
          for (std::size_t b = 0; b < nb; ++b) {
            const std::size_t k = kernels_[b];
            const auto half = static_cast<std::ptrdiff_t>(k / 2);
            for (std::size_t c = 0; c < d_; ++c) {
              T acc = 0;
              for (std::size_t j = 0; j < k; ++j) {
                const auto src = static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) - half;
                if (src < 0 || src >= static_cast<std::ptrdiff_t>(tn)) continue;
                acc += taps_[b][c * k + j] * f(static_cast<std::size_t>(src), y, x, c);
              }
              concat[b * d_ + c] = acc;
            }
          }
          T* tok = out.token(t, y, x);
          for (std::size_t o = 0; o < d_; ++o) {
            T acc = 0;
            for (std::size_t j = 0; j < nb * d_; ++j) acc += projection_[o * nb * d_ + j] * concat[j];
            tok[o] = acc;
          }
        }
      }
    }
    return out;
  }

 private:
  static void check_kernels(const std::vector<std::size_t>& kernels) {
    if (kernels.empty()) throw std::invalid_argument("TemporalConv: empty kernel set");
    for (std::size_t k : kernels) {
      if (k == 0 || k % 2 == 0) {
        throw std::invalid_argument("TemporalConv: kernel size " + std::to_string(k) +
                                    " is not odd; symmetric zero padding needs odd kernels");
      }
    }
  }

  void validate() const {
    check_kernels(kernels_);
    if (d_ == 0) throw std::invalid_argument("TemporalConv: zero channels");
    if (taps_.size() != kernels_.size()) throw std::invalid_argument("TemporalConv: branch count mismatch");
    for (std::size_t b = 0; b < kernels_.size(); ++b)
      if (taps_[b].size() != d_ * kernels_[b]) throw std::invalid_argument("TemporalConv: tap shape mismatch");
    if (projection_.size() != d_ * kernels_.size() * d_) {
      throw std::invalid_argument("TemporalConv: projection shape mismatch");
    }
  }

  std::size_t d_;
  std::vector<std::size_t> kernels_;
  std::vector<std::vector<T>> taps_;
  std::vector<T> projection_;
};

template <std::floating_point T>
FeatureGrid<T> temporal_multiscale_dwconv(const FeatureGrid<T>& f, const TemporalConv<T>& conv) {
  return conv(f);
}

/// Squeeze-and-excitation over the time axis: per-slice mean -> [m x t] -> ReLU -> [t x m]
/// -> logistic gate, m = max(1, t / reduction). The bottleneck sees all slices jointly.
template <std::floating_point T>
class TemporalSE {
 public:
  TemporalSE(std::size_t t, std::size_t reduction, std::vector<T> w1, std::vector<T> w2)
      : t_(t), m_(bottleneck(t, reduction)), w1_(std::move(w1)), w2_(std::move(w2)) {
    if (w1_.size() != m_ * t_ || w2_.size() != t_ * m_) throw std::invalid_argument("TemporalSE: weight shape");
  }

  static std::size_t bottleneck(std::size_t t, std::size_t reduction) {
    if (t == 0) throw std::invalid_argument("TemporalSE: t must be positive");
    if (reduction == 0) throw std::invalid_argument("TemporalSE: reduction must be positive");
    return std::max<std::size_t>(1, t / reduction);
  }

  static TemporalSE zeros(std::size_t t, std::size_t reduction = 2) {
    const std::size_t m = bottleneck(t, reduction);
    return TemporalSE(t, reduction, std::vector<T>(m * t, T(0)), std::vector<T>(t * m, T(0)));
  }

  static TemporalSE random(std::size_t t, std::size_t reduction = 2, std::uint64_t seed = 29, double scale = 1.0) {
    const std::size_t m = bottleneck(t, reduction);
    SeededUniform draw(seed);
    std::vector<T> w1(m * t), w2(t * m);
    for (auto& v : w1) v = static_cast<T>(scale * draw());
    for (auto& v : w2) v = static_cast<T>(scale * draw());
    return TemporalSE(t, reduction, std::move(w1), std::move(w2));
  }

  std::size_t steps() const { return t_; }
  std::size_t hidden() const { return m_; }

  /// Per-slice gates in (0, 1).
  std::vector<T> gates(const FeatureGrid<T>& f) const {
    Forward fw = forward(f);
    return fw.gate;
  }

  FeatureGrid<T> operator()(const FeatureGrid<T>& f) const {
    Forward fw = forward(f);
    FeatureGrid<T> out = f;
    const std::size_t slab = f.h() * f.w() * f.d();
    for (std::size_t t = 0; t < t_; ++t)
      for (std::size_t i = 0; i < slab; ++i) out.data()[t * slab + i] *= fw.gate[t];
    return out;
  }

  /// Gradient of sum(grad_out * se(f)) with respect to f.
  FeatureGrid<T> backward(const FeatureGrid<T>& f, const FeatureGrid<T>& grad_out) const {
    if (!grad_out.same_shape(f)) throw std::invalid_argument("TemporalSE: gradient shape mismatch");
    Forward fw = forward(f);
    const std::size_t slab = f.h() * f.w() * f.d();

    std::vector<T> d_z(t_);
    for (std::size_t t = 0; t < t_; ++t) {
      T d_gate = 0;
      for (std::size_t i = 0; i < slab; ++i) d_gate += grad_out.data()[t * slab + i] * f.data()[t * slab + i];
      d_z[t] = d_gate * fw.gate[t] * (T(1) - fw.gate[t]);
    }
    std::vector<T> d_pre(m_);
    for (std::size_t k = 0; k < m_; ++k) {
      T acc = 0;
      for (std::size_t t = 0; t < t_; ++t) acc += w2_[t * m_ + k] * d_z[t];
      d_pre[k] = fw.pre[k] > T(0) ? acc : T(0);
    }
    FeatureGrid<T> grad = grad_out;
    const T inv_slab = T(1) / static_cast<T>(slab);
    for (std::size_t t = 0; t < t_; ++t) {
      T d_squeeze = 0;
      for (std::size_t k = 0; k < m_; ++k) d_squeeze += w1_[k * t_ + t] * d_pre[k];
      const T shared = d_squeeze * inv_slab;
      for (std::size_t i = 0; i < slab; ++i) {
        T& g = grad.data()[t * slab + i];
        g = g * fw.gate[t] + shared;
      }
    }
    return grad;
  }

 private:
  struct Forward {
    std::vector<T> pre;   // bottleneck pre-activation
    std::vector<T> gate;  // logistic outputs
  };

  Forward forward(const FeatureGrid<T>& f) const {
    if (f.t() != t_) {
      throw std::invalid_argument("TemporalSE: built for t=" + std::to_string(t_) + ", got " +
                                  std::to_string(f.t()));
    }
    const std::size_t slab = f.h() * f.w() * f.d();
    std::vector<T> squeeze(t_);
    for (std::size_t t = 0; t < t_; ++t) {
      T acc = 0;
      for (std::size_t i = 0; i < slab; ++i) acc += f.data()[t * slab + i];
      squeeze[t] = acc / static_cast<T>(slab);
    }
    Forward fw{std::vector<T>(m_), std::vector<T>(t_)};
    std::vector<T> hidden(m_);
    for (std::size_t k = 0; k < m_; ++k) {
      T acc = 0;
      for (std::size_t t = 0; t < t_; ++t) acc += w1_[k * t_ + t] * squeeze[t];
      fw.pre[k] = acc;
      hidden[k] = std::max(acc, T(0));
    }
    for (std::size_t t = 0; t < t_; ++t) {
      T acc = 0;
      for (std::size_t k = 0; k < m_; ++k) acc += w2_[t * m_ + k] * hidden[k];
      // Clamp so saturated gates stay strictly inside (0, 1) in finite precision.
      const T g = T(1) / (T(1) + std::exp(-acc));
      fw.gate[t] = std::clamp(g, std::numeric_limits<T>::min(), T(1) - std::numeric_limits<T>::epsilon() / 2);
    }
    return fw;
  }

  std::size_t t_;
  std::size_t m_;
  std::vector<T> w1_;  // [m][t]
  std::vector<T> w2_;  // [t][m]
};

template <std::floating_point T>
FeatureGrid<T> se_temporal_weighting(const FeatureGrid<T>& f, const TemporalSE<T>& se) {
  return se(f);
}

}  // namespace forge::stam
