#include <gtest/gtest.h>

#include <filesystem>
#include <vector>

#include "forge/common/error.hpp"
#include "forge/common/fileio.hpp"
#include "forge/common/hash.hpp"
#include "forge/common/tensor_archive.hpp"

using namespace forge;

TEST(Hash, KnownVectors) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hash, HexRoundTrip) {
  std::string raw("\x00\x7f\xff item/7", 10);
  std::string back;
  ASSERT_TRUE(hex_decode(hex_encode(raw), back));
  EXPECT_EQ(back, raw);
  EXPECT_FALSE(hex_decode("abc", back));
  EXPECT_FALSE(hex_decode("zz", back));
}

TEST(FileIo, AtomicWriteReplacesContents) {
  auto dir = std::filesystem::temp_directory_path() / "forge_fileio_test";
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / "a.txt", "first");
  write_file_atomic(dir / "a.txt", "second");
  EXPECT_EQ(read_file(dir / "a.txt"), "second");
  EXPECT_EQ(std::distance(std::filesystem::directory_iterator(dir), {}), 1);
  EXPECT_THROW(read_file(dir / "missing"), Error);
  std::filesystem::remove_all(dir);
}

TEST(TensorArchive, RoundTripAllDtypes) {
  TensorArchive a;
  std::vector<float> f{1.5f, -2.f};
  std::vector<double> d{3.25};
  std::vector<std::uint32_t> u{1, 2, 3, 4, 5, 6};
  std::vector<std::int64_t> i{-7, 1LL << 40};
  std::vector<std::uint8_t> b{0, 255};
  a.put(NamedArray::from<float>("f", {2}, f));
  a.put(NamedArray::from<double>("d", {1, 1}, d));
  a.put(NamedArray::from<std::uint32_t>("u", {2, 3}, u));
  a.put(NamedArray::from<std::int64_t>("i", {2}, i));
  a.put(NamedArray::from<std::uint8_t>("b", {2}, b));
  auto back = TensorArchive::parse(a.serialize());
  EXPECT_EQ(back, a);
  EXPECT_EQ(back.get("u").as<std::uint32_t>(), u);
  EXPECT_EQ(back.get("i").as<std::int64_t>(), i);
  EXPECT_EQ(back.get("f").as<double>(), (std::vector<double>{1.5, -2.0}));
  EXPECT_FALSE(back.contains("missing"));
}

TEST(TensorArchive, DimsMustMatchValues) {
  std::vector<double> v{1, 2, 3};
  EXPECT_THROW(NamedArray::from<double>("x", {2, 2}, v), std::invalid_argument);
}

TEST(TensorArchive, BadMagicAndTruncationReportOffsets) {
  try {
    TensorArchive::parse("NOPE");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.offset(), 0u);
  }
  TensorArchive a;
  std::vector<double> v{1, 2, 3};
  a.put(NamedArray::from<double>("x", {3}, v));
  const std::string bytes = a.serialize();
  for (std::size_t cut = 5; cut < bytes.size(); cut += 3) {
    try {
      TensorArchive::parse(std::string_view(bytes).substr(0, cut));
      ADD_FAILURE() << "truncation at " << cut << " accepted";
    } catch (const ParseError& e) {
      EXPECT_LE(e.offset(), cut);
    }
  }
}
