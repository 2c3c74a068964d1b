#pragma once

#include <cstdint>
#include <cstring>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace forge {

enum class DType : std::uint8_t { f32 = 1, f64 = 2, u8 = 3, u32 = 4, i64 = 5 };

std::size_t dtype_size(DType dtype);
std::string_view dtype_name(DType dtype);

/// One named, row-major array. `bytes` holds the little-endian payload.
struct NamedArray {
  std::string name;
  std::vector<std::uint64_t> dims;
  DType dtype = DType::f64;
  std::string bytes;

  std::uint64_t element_count() const;

  template <typename T>
  static NamedArray from(std::string name, std::vector<std::uint64_t> dims, std::span<const T> values);

  /// Converts any numeric payload to `T`.
  template <typename T>
  std::vector<T> as() const;

  friend bool operator==(const NamedArray&, const NamedArray&) = default;
};

/// Single-file archive of named arrays: magic "TNS1", then per array
/// u32 name length, name bytes, u32 rank, u64 dims[rank], u8 dtype code, payload.
/// Arrays follow each other until end of file.
class TensorArchive {
 public:
  void put(NamedArray array);
  const NamedArray& get(std::string_view name) const;
  bool contains(std::string_view name) const;
  const std::vector<NamedArray>& arrays() const { return arrays_; }

  std::string serialize() const;
  /// Throws forge::ParseError with the byte offset of the first bad field.
  static TensorArchive parse(std::string_view bytes);

  friend bool operator==(const TensorArchive&, const TensorArchive&) = default;

 private:
  std::vector<NamedArray> arrays_;
};

template <typename T>
constexpr DType dtype_of() {
  if constexpr (std::is_same_v<T, float>) return DType::f32;
  else if constexpr (std::is_same_v<T, double>) return DType::f64;
  else if constexpr (std::is_same_v<T, std::uint8_t>) return DType::u8;
  else if constexpr (std::is_same_v<T, std::uint32_t>) return DType::u32;
  else if constexpr (std::is_same_v<T, std::int64_t>) return DType::i64;
  else static_assert(sizeof(T) == 0, "unsupported dtype");
}

template <typename T>
NamedArray NamedArray::from(std::string name, std::vector<std::uint64_t> dims, std::span<const T> values) {
  NamedArray a;
  a.name = std::move(name);
  a.dims = std::move(dims);
  a.dtype = dtype_of<T>();
  if (a.element_count() != values.size()) throw std::invalid_argument("NamedArray: dims do not match value count");
  a.bytes.resize(values.size() * sizeof(T));
  // Host is little-endian on every supported target.
  std::memcpy(a.bytes.data(), values.data(), a.bytes.size());
  return a;
}

template <typename T>
std::vector<T> NamedArray::as() const {
  const std::size_t n = element_count();
  std::vector<T> out(n);
  auto convert = [&]<typename S>() {
    for (std::size_t i = 0; i < n; ++i) {
      S v;
      std::memcpy(&v, bytes.data() + i * sizeof(S), sizeof(S));
      out[i] = static_cast<T>(v);
    }
  };
  switch (dtype) {
    case DType::f32: convert.template operator()<float>(); break;
    case DType::f64: convert.template operator()<double>(); break;
    case DType::u8: convert.template operator()<std::uint8_t>(); break;
    case DType::u32: convert.template operator()<std::uint32_t>(); break;
    case DType::i64: convert.template operator()<std::int64_t>(); break;
  }
  return out;
}

}  // namespace forge
