#include "forge/event/slice_stack.hpp"

#include <numeric>
#include <stdexcept>

#include "forge/common/error.hpp"

namespace forge::event {

SliceStack::SliceStack(std::uint32_t n_slices, std::uint32_t height, std::uint32_t width)
    : n_slices_(n_slices),
      height_(height),
      width_(width),
      counts_(static_cast<std::size_t>(n_slices) * 2 * height * width, 0) {}

std::uint64_t SliceStack::total() const {
  return std::accumulate(counts_.begin(), counts_.end(), std::uint64_t{0});
}

SliceStack accumulate_slices(const EventWindow& window, std::uint32_t n_slices, std::uint32_t height,
                             std::uint32_t width) {
  if (height == 0 || width == 0) throw std::invalid_argument("accumulate_slices: zero-sized sensor");
  if (n_slices == 0) throw std::invalid_argument("accumulate_slices: n_slices must be positive");
  if (window.duration() <= 0) throw std::invalid_argument("accumulate_slices: empty window");

  SliceStack stack(n_slices, height, width);
  const std::int64_t duration = window.duration();
  const std::int64_t rem = duration % n_slices;
  stack.pad_us = rem == 0 ? 0 : n_slices - rem;
  stack.slice_us = (duration + stack.pad_us) / n_slices;
  stack.t_start = window.t_start;

  for (const auto& e : window.events) {
    const std::int64_t dt = static_cast<std::int64_t>(e.t) - window.t_start;
    if (dt < 0 || static_cast<std::int64_t>(e.t) >= window.t_end) {
      throw Error("accumulate_slices: event at t=" + std::to_string(e.t) + " outside window");
    }
    if (e.x >= width || e.y >= height) {
      throw Error("accumulate_slices: event at (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                  ") outside " + std::to_string(width) + "x" + std::to_string(height));
    }
    const auto slice = static_cast<std::size_t>(dt / stack.slice_us);
    const std::size_t channel = e.polarity > 0 ? 0 : 1;
    ++stack.at(slice, channel, e.y, e.x);
  }
  return stack;
}

}  // namespace forge::event
