#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "forge/event/window.hpp"

namespace forge::event {

inline constexpr std::uint32_t kDefaultSlices = 3;

/// Per-slice, per-polarity event counts, laid out [slice][channel][y][x].
/// Channel 0 holds positive events, channel 1 negative.
class SliceStack {
 public:
  SliceStack(std::uint32_t n_slices, std::uint32_t height, std::uint32_t width);

  std::uint32_t n_slices() const { return n_slices_; }
  std::uint32_t height() const { return height_; }
  std::uint32_t width() const { return width_; }

  std::uint32_t at(std::size_t slice, std::size_t channel, std::size_t y, std::size_t x) const {
    return counts_[index(slice, channel, y, x)];
  }
  std::uint32_t& at(std::size_t slice, std::size_t channel, std::size_t y, std::size_t x) {
    return counts_[index(slice, channel, y, x)];
  }

  const std::vector<std::uint32_t>& counts() const { return counts_; }
  std::uint64_t total() const;

  // Slice timing: slice s covers [t_start + s*slice_us, t_start + (s+1)*slice_us).
  std::int64_t t_start = 0;
  std::int64_t slice_us = 0;
  /// Microseconds added to the window end so it divides evenly into slices.
  std::int64_t pad_us = 0;

  friend bool operator==(const SliceStack&, const SliceStack&) = default;

 private:
  std::size_t index(std::size_t s, std::size_t c, std::size_t y, std::size_t x) const {
    return ((s * 2 + c) * height_ + y) * width_ + x;
  }

  std::uint32_t n_slices_;
  std::uint32_t height_;
  std::uint32_t width_;
  std::vector<std::uint32_t> counts_;
};

/// Accumulates window events into `n_slices` equal half-open sub-intervals. Throws
/// std::invalid_argument for zero dimensions or slices, and forge::Error for an event
/// outside the given geometry.
SliceStack accumulate_slices(const EventWindow& window, std::uint32_t n_slices,
                             std::uint32_t height, std::uint32_t width);

}  // namespace forge::event
