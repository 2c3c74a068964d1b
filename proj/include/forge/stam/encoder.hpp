#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "forge/stam/grid.hpp"
#include "forge/stam/random.hpp"

namespace forge::stam {

/// Deterministic stand-in for a real backbone: mean-pool each patch, then apply a fixed
/// random [d x c] linear map drawn from `seed`.
template <std::floating_point T>
class PatchEncoder {
 public:
  PatchEncoder(std::size_t in_channels, std::size_t out_channels, std::size_t patch, std::uint64_t seed)
      : c_(in_channels), d_(out_channels), patch_(patch), weights_(in_channels * out_channels) {
    if (in_channels == 0 || out_channels == 0 || patch == 0) {
      throw std::invalid_argument("PatchEncoder: channels and patch must be positive");
    }
    SeededUniform draw(seed);
    const double scale = 1.0 / std::sqrt(static_cast<double>(in_channels));
    for (auto& w : weights_) w = static_cast<T>(draw() * scale);
  }

  std::size_t patch() const { return patch_; }
  std::size_t out_channels() const { return d_; }
  /// Row-major [d][c].
  const std::vector<T>& weights() const { return weights_; }

  /// Encodes `frames` (all the same size) into a grid with one time step per frame.
  FeatureGrid<T> encode(std::span<const Image<T>> frames) const {
    if (frames.empty()) throw std::invalid_argument("PatchEncoder: no frames");
    const auto& first = frames.front();
    if (first.c != c_) throw std::invalid_argument("PatchEncoder: channel count mismatch");
    if (first.h == 0 || first.w == 0 || first.h % patch_ != 0 || first.w % patch_ != 0) {
      throw std::invalid_argument("PatchEncoder: image size " + std::to_string(first.h) + "x" +
                                  std::to_string(first.w) + " not divisible by patch " +
                                  std::to_string(patch_));
    }
    const std::size_t gh = first.h / patch_;
    const std::size_t gw = first.w / patch_;
    FeatureGrid<T> out(frames.size(), gh, gw, d_);
    std::vector<T> pooled(c_);
    const T inv_area = T(1) / static_cast<T>(patch_ * patch_);
    for (std::size_t t = 0; t < frames.size(); ++t) {
      const auto& img = frames[t];
      if (img.h != first.h || img.w != first.w || img.c != c_) {
        throw std::invalid_argument("PatchEncoder: frames differ in size");
      }
      for (std::size_t py = 0; py < gh; ++py) {
        for (std::size_t px = 0; px < gw; ++px) {
          std::fill(pooled.begin(), pooled.end(), T(0));
          for (std::size_t y = py * patch_; y < (py + 1) * patch_; ++y)
            for (std::size_t x = px * patch_; x < (px + 1) * patch_; ++x)
              for (std::size_t ch = 0; ch < c_; ++ch) pooled[ch] += img(y, x, ch);
          for (auto& v : pooled) v *= inv_area;
          T* tok = out.token(t, py, px);
          for (std::size_t o = 0; o < d_; ++o) {
            T acc = 0;
            for (std::size_t ch = 0; ch < c_; ++ch) acc += weights_[o * c_ + ch] * pooled[ch];
            tok[o] = acc;
          }
        }
      }
    }
    return out;
  }

  FeatureGrid<T> encode(const Image<T>& image) const { return encode(std::span<const Image<T>>(&image, 1)); }

 private:
  std::size_t c_;
  std::size_t d_;
  std::size_t patch_;
  std::vector<T> weights_;
};

template <std::floating_point T>
FeatureGrid<T> toy_patch_encoder(const Image<T>& image, std::size_t patch, std::size_t d, std::uint64_t seed) {
  return PatchEncoder<T>(image.c, d, patch, seed).encode(image);
}

}  // namespace forge::stam
