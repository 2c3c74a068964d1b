#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "forge/event/event_stream.hpp"

namespace forge::event {

inline constexpr std::uint32_t kDefaultWindowFrames = 4;
inline constexpr std::uint32_t kDefaultFrameMs = 33;

/// Half-open interval [t_start, t_end) centred on a keyframe, with the events inside it.
/// Bounds are signed because a keyframe near t = 0 yields a negative start.
struct EventWindow {
  std::int64_t t_start = 0;
  std::int64_t t_end = 0;
  std::int64_t keyframe_t = 0;
  std::vector<EventRecord> events;
  std::vector<std::string> warnings;

  std::int64_t duration() const { return t_end - t_start; }
};

/// Selects the n * frame_ms window centred on `keyframe_t`. Throws std::invalid_argument
/// when n or frame_ms is zero. Windows reaching past the stream are allowed but warned.
EventWindow select_window(const EventStream& stream, std::int64_t keyframe_t,
                          std::uint32_t n = kDefaultWindowFrames,
                          std::uint32_t frame_ms = kDefaultFrameMs);

/// Same selection over an already sorted event span.
EventWindow select_window(std::span<const EventRecord> events, std::int64_t keyframe_t,
                          std::uint32_t n = kDefaultWindowFrames,
                          std::uint32_t frame_ms = kDefaultFrameMs);

}  // namespace forge::event
