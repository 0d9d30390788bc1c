#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cheapnvs {

/// Dense float image, interleaved HWC, row-major.
///
/// Used for RGB (3 channels), depth and masks (1 channel) and shift maps
/// (2 channels, dx then dy).
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<float> data;

  Image() = default;
  Image(int h, int w, int c, float fill = 0.0f);

  std::size_t index(int y, int x, int c = 0) const {
    return (static_cast<std::size_t>(y) * width + x) * channels + c;
  }
  float& at(int y, int x, int c = 0) { return data[index(y, x, c)]; }
  float at(int y, int x, int c = 0) const { return data[index(y, x, c)]; }

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }
  bool empty() const { return data.empty(); }
  bool same_size(const Image& other) const {
    return height == other.height && width == other.width;
  }
  bool same_shape(const Image& other) const {
    return same_size(other) && channels == other.channels;
  }

  std::span<float> pixel(int y, int x) { return {&data[index(y, x)], static_cast<std::size_t>(channels)}; }
  std::span<const float> pixel(int y, int x) const {
    return {&data[index(y, x)], static_cast<std::size_t>(channels)};
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Throws ShapeError naming `what` unless the two images agree in H and W
/// (and C when `check_channels`).
void require_same_shape(const Image& a, const Image& b, const std::string& what,
                        bool check_channels = true);

/// Throws ShapeError unless `image` has the given channel count.
void require_channels(const Image& image, int channels, const std::string& what);

/// Single-channel luma with Rec.601 weights.
Image rgb_to_luma(const Image& rgb);

/// Horizontal mirror.
Image flip_horizontal(const Image& image);

/// Sub-rectangle copy; throws ShapeError if out of bounds.
Image crop(const Image& image, int y0, int x0, int h, int w);

/// Median of all values (lower median for even counts).
float median(std::span<const float> values);

}  // namespace cheapnvs
