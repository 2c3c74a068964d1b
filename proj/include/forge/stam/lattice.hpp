#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "forge/stam/grid.hpp"

namespace forge::stam {

struct LatticeSize {
  std::size_t t = 0, h = 0, w = 0;
};

/// T_c follows the event grid; H_c and W_c take the smaller of the two spatial sizes.
template <std::floating_point T>
LatticeSize default_lattice(const FeatureGrid<T>& rgb, const FeatureGrid<T>& event) {
  return {event.t(), std::min(rgb.h(), event.h()), std::min(rgb.w(), event.w())};
}

namespace detail {

struct Tap {
  std::size_t lo = 0, hi = 0;
  double frac = 0.0;
};

/// Corner-aligned source taps: output i maps to i * (in - 1) / (out - 1).
inline std::vector<Tap> corner_aligned_taps(std::size_t in, std::size_t out) {
  std::vector<Tap> taps(out);
  for (std::size_t i = 0; i < out; ++i) {
    if (in == 1 || out == 1) continue;  // every output reads index 0
    const double src = static_cast<double>(i * (in - 1)) / static_cast<double>(out - 1);
    auto lo = static_cast<std::size_t>(std::floor(src));
    lo = std::min(lo, in - 1);
    taps[i] = {lo, std::min(lo + 1, in - 1), src - static_cast<double>(lo)};
  }
  return taps;
}

// a + f * (b - a) reproduces constants exactly.
template <typename T>
T lerp(T a, T b, T f) {
  return a + f * (b - a);
}

}  // namespace detail

/// Separable linear interpolation on t, y and x with corner-aligned coordinates. A grid
/// with a single time step is replicated across t.
template <std::floating_point T>
FeatureGrid<T> resample(const FeatureGrid<T>& in, LatticeSize size) {
  if (size.t == 0 || size.h == 0 || size.w == 0) throw std::invalid_argument("resample: empty lattice");
  const auto tt = detail::corner_aligned_taps(in.t(), size.t);
  const auto ty = detail::corner_aligned_taps(in.h(), size.h);
  const auto tx = detail::corner_aligned_taps(in.w(), size.w);
  const std::size_t d = in.d();

  using detail::lerp;
  // x pass, then y, then t; each pass is a 1D lerp.
  FeatureGrid<T> px(in.t(), in.h(), size.w, d);
  for (std::size_t t = 0; t < in.t(); ++t)
    for (std::size_t y = 0; y < in.h(); ++y)
      for (std::size_t x = 0; x < size.w; ++x) {
        const auto f = static_cast<T>(tx[x].frac);
        for (std::size_t c = 0; c < d; ++c)
          px(t, y, x, c) = lerp(in(t, y, tx[x].lo, c), in(t, y, tx[x].hi, c), f);
      }
  FeatureGrid<T> py(in.t(), size.h, size.w, d);
  for (std::size_t t = 0; t < in.t(); ++t)
    for (std::size_t y = 0; y < size.h; ++y)
      for (std::size_t x = 0; x < size.w; ++x) {
        const auto f = static_cast<T>(ty[y].frac);
        for (std::size_t c = 0; c < d; ++c)
          py(t, y, x, c) = lerp(px(t, ty[y].lo, x, c), px(t, ty[y].hi, x, c), f);
      }
  FeatureGrid<T> out(size.t, size.h, size.w, d);
  for (std::size_t t = 0; t < size.t; ++t) {
    const auto f = static_cast<T>(tt[t].frac);
    for (std::size_t y = 0; y < size.h; ++y)
      for (std::size_t x = 0; x < size.w; ++x)
        for (std::size_t c = 0; c < d; ++c)
          out(t, y, x, c) = lerp(py(tt[t].lo, y, x, c), py(tt[t].hi, y, x, c), f);
  }
  return out;
}

template <std::floating_point T>
AlignedPair<T> resample_to_lattice(const FeatureGrid<T>& rgb, const FeatureGrid<T>& event, LatticeSize size) {
  if (rgb.d() != event.d()) {
    throw std::invalid_argument("resample_to_lattice: channel mismatch (" + std::to_string(rgb.d()) + " vs " +
                                std::to_string(event.d()) + ")");
  }
  return {resample(rgb, size), resample(event, size)};
}

template <std::floating_point T>
AlignedPair<T> resample_to_lattice(const FeatureGrid<T>& rgb, const FeatureGrid<T>& event) {
  return resample_to_lattice(rgb, event, default_lattice(rgb, event));
}

}  // namespace forge::stam
