#include "forge/event/event_stream.hpp"

#include <algorithm>
#include <charconv>
#include <cstring>
#include <limits>
#include <stdexcept>

#include "forge/common/error.hpp"

namespace forge::event {

StreamFormat parse_format(std::string_view name) {
  if (name == "csv") return StreamFormat::csv;
  if (name == "evs" || name == "bin" || name == "packed-binary") return StreamFormat::evs;
  throw std::invalid_argument("unknown event format '" + std::string(name) + "'");
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

template <typename Int>
bool parse_int(std::string_view field, Int& out) {
  field = trim(field);
  if (!field.empty() && field.front() == '+') field.remove_prefix(1);
  if (field.empty()) return false;
  auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), out);
  return ec == std::errc{} && ptr == field.data() + field.size();
}

// Tracks ordering while records arrive and applies the tolerance policy.
class OrderCheck {
 public:
  explicit OrderCheck(const ParseOptions& options) : options_(options) {}

  // Returns false when the regression exceeds the tolerance.
  bool accept(std::uint64_t t) {
    if (!seen_) {
      seen_ = true;
      max_t_ = t;
      return true;
    }
    if (t < max_t_) {
      needs_sort_ = true;
      if (!options_.sort && max_t_ - t > options_.regression_tolerance_us) return false;
    } else {
      max_t_ = t;
    }
    return true;
  }

  void finish(std::vector<EventRecord>& events) const {
    if (needs_sort_) {
      std::stable_sort(events.begin(), events.end(),
                       [](const EventRecord& a, const EventRecord& b) { return a.t < b.t; });
    }
  }

  std::uint64_t max_t() const { return max_t_; }

 private:
  const ParseOptions& options_;
  bool seen_ = false;
  bool needs_sort_ = false;
  std::uint64_t max_t_ = 0;
};

EventStream parse_csv(std::string_view bytes, const ParseOptions& options) {
  EventStream stream;
  std::size_t pos = 0;
  std::size_t line_no = 0;
  bool have_header = false;
  OrderCheck order(options);

  while (pos < bytes.size()) {
    std::size_t eol = bytes.find('\n', pos);
    if (eol == std::string_view::npos) eol = bytes.size();
    std::string_view line = trim(bytes.substr(pos, eol - pos));
    const std::size_t line_offset = pos;
    pos = eol + 1;
    ++line_no;
    if (line.empty()) continue;

    if (!have_header) {
      // w=<int>,h=<int>
      auto comma = line.find(',');
      if (comma == std::string_view::npos) {
        throw ParseError("expected header 'w=<int>,h=<int>'", line_no, line_offset);
      }
      auto w_field = trim(line.substr(0, comma));
      auto h_field = trim(line.substr(comma + 1));
      if (!w_field.starts_with("w=") || !h_field.starts_with("h=") ||
          !parse_int(w_field.substr(2), stream.width) || !parse_int(h_field.substr(2), stream.height)) {
        throw ParseError("expected header 'w=<int>,h=<int>'", line_no, line_offset);
      }
      if (stream.width == 0 || stream.height == 0 ||
          stream.width > std::numeric_limits<std::uint16_t>::max() + 1u ||
          stream.height > std::numeric_limits<std::uint16_t>::max() + 1u) {
        throw ParseError("sensor geometry out of range", line_no, line_offset);
      }
      have_header = true;
      continue;
    }

    std::string_view fields[4];
    std::size_t n_fields = 0;
    std::size_t start = 0;
    while (true) {
      auto comma = line.find(',', start);
      if (n_fields == 4) {
        throw ParseError("too many fields, expected t,x,y,p", line_no, line_offset);
      }
      fields[n_fields++] = line.substr(start, comma == std::string_view::npos ? line.npos : comma - start);
      if (comma == std::string_view::npos) break;
      start = comma + 1;
    }
    if (n_fields != 4) throw ParseError("expected 4 fields t,x,y,p", line_no, line_offset);

    EventRecord rec;
    std::uint32_t x = 0;
    std::uint32_t y = 0;
    int p = 0;
    if (!parse_int(fields[0], rec.t)) throw ParseError("bad timestamp", line_no, line_offset);
    if (!parse_int(fields[1], x) || !parse_int(fields[2], y)) {
      throw ParseError("bad coordinate", line_no, line_offset);
    }
    if (!parse_int(fields[3], p) || (p != 1 && p != -1)) {
      throw ParseError("polarity must be 1 or -1", line_no, line_offset);
    }
    if (x >= stream.width || y >= stream.height) {
      throw ParseError("coordinate (" + std::to_string(x) + "," + std::to_string(y) +
                           ") outside " + std::to_string(stream.width) + "x" +
                           std::to_string(stream.height) + " sensor",
                       line_no, line_offset);
    }
    if (!order.accept(rec.t)) {
      throw ParseError("timestamp regression from " + std::to_string(order.max_t()) + " to " +
                           std::to_string(rec.t),
                       line_no, line_offset);
    }
    rec.x = static_cast<std::uint16_t>(x);
    rec.y = static_cast<std::uint16_t>(y);
    rec.polarity = static_cast<std::int8_t>(p);
    stream.events.push_back(rec);
  }
  if (!have_header) throw ParseError("missing header 'w=<int>,h=<int>'", line_no + 1, bytes.size());
  order.finish(stream.events);
  return stream;
}

template <typename T>
T load_le(const unsigned char* p) {
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(p[i]) << (8 * i);
  return v;
}

template <typename T>
void store_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

EventStream parse_evs(std::string_view bytes, const ParseOptions& options) {
  const auto* data = reinterpret_cast<const unsigned char*>(bytes.data());
  if (bytes.size() < kEvsHeaderSize) throw ParseError("truncated EVS1 header", 0, bytes.size());
  if (std::memcmp(data, "EVS1", 4) != 0) throw ParseError("bad magic, expected EVS1", 0, 0);
  EventStream stream;
  stream.width = load_le<std::uint16_t>(data + 4);
  stream.height = load_le<std::uint16_t>(data + 6);
  if (stream.width == 0 || stream.height == 0) throw ParseError("zero sensor geometry", 0, 4);

  const std::size_t body = bytes.size() - kEvsHeaderSize;
  if (body % kEvsRecordSize != 0) {
    const std::size_t tail = kEvsHeaderSize + (body / kEvsRecordSize) * kEvsRecordSize;
    throw ParseError("trailing partial record of " + std::to_string(body % kEvsRecordSize) + " bytes",
                     0, tail);
  }
  const std::size_t n = body / kEvsRecordSize;
  stream.events.resize(n);
  OrderCheck order(options);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t off = kEvsHeaderSize + i * kEvsRecordSize;
    const unsigned char* rec = data + off;
    EventRecord& e = stream.events[i];
    e.t = load_le<std::uint64_t>(rec);
    e.x = load_le<std::uint16_t>(rec + 8);
    e.y = load_le<std::uint16_t>(rec + 10);
    e.polarity = static_cast<std::int8_t>(rec[12]);
    if (e.polarity != 1 && e.polarity != -1) throw ParseError("polarity must be 1 or -1", 0, off + 12);
    if (e.x >= stream.width || e.y >= stream.height) {
      throw ParseError("coordinate outside sensor", 0, off + 8);
    }
    if (!order.accept(e.t)) throw ParseError("timestamp regression", 0, off);
  }
  order.finish(stream.events);
  return stream;
}

}  // namespace

EventStream parse_event_stream(std::string_view bytes, StreamFormat format, const ParseOptions& options) {
  return format == StreamFormat::csv ? parse_csv(bytes, options) : parse_evs(bytes, options);
}

std::string encode_evs(const EventStream& stream) {
  if (stream.width > std::numeric_limits<std::uint16_t>::max() ||
      stream.height > std::numeric_limits<std::uint16_t>::max()) {
    throw std::invalid_argument("sensor geometry does not fit the EVS1 header");
  }
  std::string out;
  out.reserve(kEvsHeaderSize + stream.events.size() * kEvsRecordSize);
  out.append("EVS1");
  store_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.width));
  store_le<std::uint16_t>(out, static_cast<std::uint16_t>(stream.height));
  out.append(8, '\0');
  for (const auto& e : stream.events) {
    store_le<std::uint64_t>(out, e.t);
    store_le<std::uint16_t>(out, e.x);
    store_le<std::uint16_t>(out, e.y);
    out.push_back(static_cast<char>(e.polarity));
    out.append(3, '\0');
  }
  return out;
}

std::string encode_csv(const EventStream& stream) {
  std::string out = "w=" + std::to_string(stream.width) + ",h=" + std::to_string(stream.height) + "\n";
  for (const auto& e : stream.events) {
    out += std::to_string(e.t);
    out += ',';
    out += std::to_string(e.x);
    out += ',';
    out += std::to_string(e.y);
    out += ',';
    out += std::to_string(static_cast<int>(e.polarity));
    out += '\n';
  }
  return out;
}

}  // namespace forge::event
