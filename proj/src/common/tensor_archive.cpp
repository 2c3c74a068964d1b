#include "forge/common/tensor_archive.hpp"

#include <algorithm>

#include "forge/common/error.hpp"

namespace forge {

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::f32: return 4;
    case DType::f64: return 8;
    case DType::u8: return 1;
    case DType::u32: return 4;
    case DType::i64: return 8;
  }
  throw std::invalid_argument("unknown dtype");
}

std::string_view dtype_name(DType dtype) {
  switch (dtype) {
    case DType::f32: return "f32";
    case DType::f64: return "f64";
    case DType::u8: return "u8";
    case DType::u32: return "u32";
    case DType::i64: return "i64";
  }
  return "?";
}

std::uint64_t NamedArray::element_count() const {
  std::uint64_t n = 1;
  for (auto d : dims) n *= d;
  return n;
}

void TensorArchive::put(NamedArray array) {
  if (array.bytes.size() != array.element_count() * dtype_size(array.dtype)) {
    throw std::invalid_argument("TensorArchive: payload size mismatch for '" + array.name + "'");
  }
  auto it = std::find_if(arrays_.begin(), arrays_.end(), [&](const auto& a) { return a.name == array.name; });
  if (it != arrays_.end()) *it = std::move(array);
  else arrays_.push_back(std::move(array));
}

const NamedArray& TensorArchive::get(std::string_view name) const {
  for (const auto& a : arrays_)
    if (a.name == name) return a;
  throw Error("tensor archive has no array named '" + std::string(name) + "'");
}

bool TensorArchive::contains(std::string_view name) const {
  return std::any_of(arrays_.begin(), arrays_.end(), [&](const auto& a) { return a.name == name; });
}

namespace {

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

  template <typename T>
  T le(const char* what) {
    need(sizeof(T), what);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<T>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return v;
  }

  std::string_view take(std::size_t n, const char* what) {
    need(n, what);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n, const char* what) const {
    if (bytes_.size() - pos_ < n) throw ParseError(std::string("truncated ") + what, 0, pos_);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string TensorArchive::serialize() const {
  std::string out = "TNS1";
  for (const auto& a : arrays_) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.name.size()));
    out += a.name;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(a.dims.size()));
    for (auto d : a.dims) put_le<std::uint64_t>(out, d);
    out.push_back(static_cast<char>(a.dtype));
    out += a.bytes;
  }
  return out;
}

TensorArchive TensorArchive::parse(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4, "magic") != "TNS1") throw ParseError("bad magic, expected TNS1", 0, 0);
  TensorArchive archive;
  while (!r.done()) {
    NamedArray a;
    const auto name_len = r.le<std::uint32_t>("name length");
    a.name = std::string(r.take(name_len, "name"));
    const auto rank_at = r.pos();
    const auto rank = r.le<std::uint32_t>("rank");
    if (rank > 16) throw ParseError("implausible rank " + std::to_string(rank), 0, rank_at);
    for (std::uint32_t i = 0; i < rank; ++i) a.dims.push_back(r.le<std::uint64_t>("dims"));
    const auto dtype_at = r.pos();
    const auto code = r.le<std::uint8_t>("dtype");
    if (code < 1 || code > 5) throw ParseError("unknown dtype code " + std::to_string(code), 0, dtype_at);
    a.dtype = static_cast<DType>(code);
    const std::uint64_t n = a.element_count();
    const std::uint64_t size = n * dtype_size(a.dtype);
    if (size > bytes.size()) throw ParseError("payload larger than archive", 0, r.pos());
    a.bytes = std::string(r.take(static_cast<std::size_t>(size), "payload"));
    archive.arrays_.push_back(std::move(a));
  }
  return archive;
}

}  // namespace forge
