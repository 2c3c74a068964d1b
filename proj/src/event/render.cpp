#include "forge/event/render.hpp"

#include <png.h>

#include <algorithm>
#include <stdexcept>
#include <vector>

#include "forge/common/error.hpp"

namespace forge::event {

namespace {

std::uint8_t lerp(std::uint8_t from, std::uint8_t to, double t) {
  return static_cast<std::uint8_t>(from + (static_cast<double>(to) - from) * t + 0.5);
}

}  // namespace

std::string render_slice_png(const SliceStack& stack, std::uint32_t slice_index) {
  if (slice_index >= stack.n_slices()) {
    throw std::out_of_range("render_slice_png: slice " + std::to_string(slice_index) + " of " +
                            std::to_string(stack.n_slices()));
  }
  const std::uint32_t h = stack.height();
  const std::uint32_t w = stack.width();

  std::uint32_t peak = 0;
  for (std::uint32_t y = 0; y < h; ++y)
    for (std::uint32_t x = 0; x < w; ++x)
      peak = std::max({peak, stack.at(slice_index, 0, y, x), stack.at(slice_index, 1, y, x)});

  std::vector<png_byte> rgb(static_cast<std::size_t>(h) * w * 3, kBackgroundGray);
  if (peak > 0) {
    for (std::uint32_t y = 0; y < h; ++y) {
      for (std::uint32_t x = 0; x < w; ++x) {
        const double pos = static_cast<double>(stack.at(slice_index, 0, y, x)) / peak;
        const double neg = static_cast<double>(stack.at(slice_index, 1, y, x)) / peak;
        if (pos == 0.0 && neg == 0.0) continue;
        png_byte* px = &rgb[(static_cast<std::size_t>(y) * w + x) * 3];
        // Red channel rises with positive events, blue with negative; green fades with either.
        px[0] = lerp(kBackgroundGray, 255, pos);
        px[2] = lerp(kBackgroundGray, 255, neg);
        px[1] = lerp(kBackgroundGray, 0, std::max(pos, neg));
        if (pos == 0.0) px[0] = lerp(kBackgroundGray, 0, neg);
        if (neg == 0.0) px[2] = lerp(kBackgroundGray, 0, pos);
      }
    }
  }

  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = w;
  image.height = h;
  image.format = PNG_FORMAT_RGB;

  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(std::string("render_slice_png: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(std::string("render_slice_png: ") + image.message);
  }
  out.resize(size);
  return out;
}

double RgbImage::mean_luma() const {
  const std::size_t n = static_cast<std::size_t>(width) * height;
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    sum += 0.299 * pixels[3 * i] + 0.587 * pixels[3 * i + 1] + 0.114 * pixels[3 * i + 2];
  return sum / static_cast<double>(n);
}

RgbImage decode_png_rgb(std::string_view bytes) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw Error(std::string("decode_png_rgb: ") + image.message);
  image.format = PNG_FORMAT_RGB;
  RgbImage out;
  out.width = image.width;
  out.height = image.height;
  out.pixels.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw Error(std::string("decode_png_rgb: ") + image.message);
  }
  return out;
}

std::string encode_png_rgb(const RgbImage& img) {
  if (img.pixels.size() != static_cast<std::size_t>(img.width) * img.height * 3)
    throw std::invalid_argument("encode_png_rgb: pixel buffer does not match geometry");
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = img.width;
  image.height = img.height;
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.pixels.data(), 0, nullptr))
    throw Error(std::string("encode_png_rgb: ") + image.message);
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.pixels.data(), 0, nullptr))
    throw Error(std::string("encode_png_rgb: ") + image.message);
  out.resize(size);
  return out;
}

}  // namespace forge::event
