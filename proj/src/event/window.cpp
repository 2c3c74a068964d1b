#include "forge/event/window.hpp"

#include <algorithm>
#include <stdexcept>

namespace forge::event {

EventWindow select_window(std::span<const EventRecord> events, std::int64_t keyframe_t,
                          std::uint32_t n, std::uint32_t frame_ms) {
  if (n == 0) throw std::invalid_argument("select_window: n must be positive");
  if (frame_ms == 0) throw std::invalid_argument("select_window: frame_ms must be positive");

  // frame_ms * 1000 is even, so the half-width is exact.
  const std::int64_t half = static_cast<std::int64_t>(n) * frame_ms * 1000 / 2;
  EventWindow w;
  w.keyframe_t = keyframe_t;
  w.t_start = keyframe_t - half;
  w.t_end = keyframe_t + half;

  auto before = [](const EventRecord& e, std::int64_t t) { return static_cast<std::int64_t>(e.t) < t; };
  auto first = std::lower_bound(events.begin(), events.end(), w.t_start, before);
  auto last = std::lower_bound(first, events.end(), w.t_end, before);
  w.events.assign(first, last);

  if (events.empty()) {
    w.warnings.push_back("stream is empty");
  } else {
    const auto lo = static_cast<std::int64_t>(events.front().t);
    const auto hi = static_cast<std::int64_t>(events.back().t);
    if (keyframe_t < lo || keyframe_t > hi) {
      w.warnings.push_back("keyframe " + std::to_string(keyframe_t) + " outside stream span [" +
                           std::to_string(lo) + ", " + std::to_string(hi) + "]");
    } else if (w.t_start < lo || w.t_end > hi + 1) {
      w.warnings.push_back("window [" + std::to_string(w.t_start) + ", " + std::to_string(w.t_end) +
                           ") extends past stream span [" + std::to_string(lo) + ", " +
                           std::to_string(hi) + "]");
    }
  }
  return w;
}

EventWindow select_window(const EventStream& stream, std::int64_t keyframe_t, std::uint32_t n,
                          std::uint32_t frame_ms) {
  return select_window(std::span<const EventRecord>(stream.events), keyframe_t, n, frame_ms);
}

}  // namespace forge::event
