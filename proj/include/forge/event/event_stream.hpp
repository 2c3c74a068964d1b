#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace forge::event {

/// One brightness-change event. `t` is in microseconds.
struct EventRecord {
  std::uint64_t t = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t polarity = 1;  // +1 or -1

  friend bool operator==(const EventRecord&, const EventRecord&) = default;
};

/// Time-sorted events from a sensor of fixed geometry.
struct EventStream {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<EventRecord> events;

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

enum class StreamFormat { csv, evs };

StreamFormat parse_format(std::string_view name);

struct ParseOptions {
  /// Largest backwards jump in t (µs) tolerated before the parse fails. Tolerated
  /// regressions are repaired with a stable sort.
  std::uint64_t regression_tolerance_us = 0;
  /// Accept any ordering and sort afterwards (the CLI `--sort` flag).
  bool sort = false;
};

/// Decodes `bytes` into a bounds-checked, time-sorted stream. Throws forge::ParseError
/// carrying the line (csv) or byte offset (evs) of the first bad record.
EventStream parse_event_stream(std::string_view bytes, StreamFormat format,
                               const ParseOptions& options = {});

/// Packed-binary wire format: 16-byte header ("EVS1", u16 w, u16 h, 8 pad) followed by
/// 16-byte little-endian records (u64 t, u16 x, u16 y, i8 p, 3 pad).
std::string encode_evs(const EventStream& stream);
std::string encode_csv(const EventStream& stream);

inline constexpr std::size_t kEvsHeaderSize = 16;
inline constexpr std::size_t kEvsRecordSize = 16;

}  // namespace forge::event
