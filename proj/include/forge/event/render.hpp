#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "forge/event/slice_stack.hpp"

namespace forge::event {

/// Mid-gray background; positive counts push toward red, negative toward blue,
/// scaled by the slice's largest count. Output is an RGB8 PNG.
std::string render_slice_png(const SliceStack& stack, std::uint32_t slice_index);

inline constexpr std::uint8_t kBackgroundGray = 128;

/// Interleaved 8-bit RGB raster.
struct RgbImage {
  std::uint32_t width = 0;
  std::uint32_t height = 0;
  std::vector<std::uint8_t> pixels;

  /// Rec. 601 luma averaged over all pixels, in [0, 255].
  double mean_luma() const;
};

/// Any PNG libpng can read, converted to RGB8. Throws forge::Error on undecodable input.
RgbImage decode_png_rgb(std::string_view bytes);
std::string encode_png_rgb(const RgbImage& image);

}  // namespace forge::event
