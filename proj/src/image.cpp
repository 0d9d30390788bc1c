#include "cheapnvs/image.hpp"

#include <algorithm>

#include "cheapnvs/errors.hpp"

namespace cheapnvs {

Image::Image(int h, int w, int c, float fill) : height(h), width(w), channels(c) {
  if (h < 0 || w < 0 || c < 0) throw ShapeError("negative image dimension");
  data.assign(static_cast<std::size_t>(h) * w * c, fill);
}

void require_same_shape(const Image& a, const Image& b, const std::string& what,
                        bool check_channels) {
  const bool ok = check_channels ? a.same_shape(b) : a.same_size(b);
  if (!ok) {
    throw ShapeError(what + ": shape mismatch (" + std::to_string(a.height) + "x" +
                     std::to_string(a.width) + "x" + std::to_string(a.channels) + " vs " +
                     std::to_string(b.height) + "x" + std::to_string(b.width) + "x" +
                     std::to_string(b.channels) + ")");
  }
}

void require_channels(const Image& image, int channels, const std::string& what) {
  if (image.channels != channels) {
    throw ShapeError(what + ": expected " + std::to_string(channels) + " channels, got " +
                     std::to_string(image.channels));
  }
}

Image rgb_to_luma(const Image& rgb) {
  require_channels(rgb, 3, "rgb_to_luma");
  Image out(rgb.height, rgb.width, 1);
  for (std::size_t i = 0; i < rgb.pixels(); ++i) {
    const float* p = &rgb.data[i * 3];
    out.data[i] = 0.299f * p[0] + 0.587f * p[1] + 0.114f * p[2];
  }
  return out;
}

Image flip_horizontal(const Image& image) {
  Image out(image.height, image.width, image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const auto src = image.pixel(y, image.width - 1 - x);
      std::copy(src.begin(), src.end(), out.pixel(y, x).begin());
    }
  }
  return out;
}

Image crop(const Image& image, int y0, int x0, int h, int w) {
  if (y0 < 0 || x0 < 0 || h <= 0 || w <= 0 || y0 + h > image.height || x0 + w > image.width) {
    throw ShapeError("crop window out of bounds");
  }
  Image out(h, w, image.channels);
  for (int y = 0; y < h; ++y) {
    const auto* row = &image.data[image.index(y0 + y, x0)];
    std::copy(row, row + static_cast<std::size_t>(w) * image.channels, &out.data[out.index(y, 0)]);
  }
  return out;
}

float median(std::span<const float> values) {
  if (values.empty()) throw ValidationError("median of empty range");
  std::vector<float> tmp(values.begin(), values.end());
  auto mid = tmp.begin() + static_cast<std::ptrdiff_t>((tmp.size() - 1) / 2);
  std::nth_element(tmp.begin(), mid, tmp.end());
  return *mid;
}

}  // namespace cheapnvs
