#include "cheapnvs/io.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <opencv2/imgcodecs.hpp>
#include <opencv2/imgproc.hpp>

#include "cheapnvs/errors.hpp"

namespace cheapnvs::io {

static_assert(std::endian::native == std::endian::little, "raw containers assume a little-endian host");

namespace {

std::ofstream open_out(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  return out;
}

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  return in;
}

void put_u32(std::ostream& out, std::uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

std::uint32_t get_u32(std::istream& in, const fs::path& path) {
  std::uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw IoError(path.string(), "truncated header");
  return v;
}

void expect_magic(std::istream& in, const char (&magic)[5], const fs::path& path) {
  char buf[4];
  if (!in.read(buf, 4) || std::memcmp(buf, magic, 4) != 0) {
    throw IoError(path.string(), std::string("bad magic, expected ") + magic);
  }
}

void read_floats(std::istream& in, float* dst, std::size_t n, const fs::path& path) {
  if (!in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n * sizeof(float)))) {
    throw IoError(path.string(), "truncated payload");
  }
}

}  // namespace

void write_nvss(const fs::path& path, const Image& image) {
  auto out = open_out(path);
  out.write("NVSS", 4);
  put_u32(out, static_cast<std::uint32_t>(image.height));
  put_u32(out, static_cast<std::uint32_t>(image.width));
  put_u32(out, static_cast<std::uint32_t>(image.channels));
  std::vector<float> plane(image.pixels());
  for (int c = 0; c < image.channels; ++c) {
    for (std::size_t i = 0; i < plane.size(); ++i) plane[i] = image.data[i * image.channels + c];
    out.write(reinterpret_cast<const char*>(plane.data()), static_cast<std::streamsize>(plane.size() * sizeof(float)));
  }
  if (!out) throw IoError(path.string(), "write failed");
}

Image read_nvss(const fs::path& path) {
  auto in = open_in(path);
  expect_magic(in, "NVSS", path);
  const auto h = get_u32(in, path);
  const auto w = get_u32(in, path);
  const auto c = get_u32(in, path);
  Image image(static_cast<int>(h), static_cast<int>(w), static_cast<int>(c));
  std::vector<float> plane(image.pixels());
  for (std::uint32_t ch = 0; ch < c; ++ch) {
    read_floats(in, plane.data(), plane.size(), path);
    for (std::size_t i = 0; i < plane.size(); ++i) image.data[i * c + ch] = plane[i];
  }
  return image;
}

void write_nvsd(const fs::path& path, const Image& depth) {
  require_channels(depth, 1, "write_nvsd");
  auto out = open_out(path);
  out.write("NVSD", 4);
  put_u32(out, static_cast<std::uint32_t>(depth.height));
  put_u32(out, static_cast<std::uint32_t>(depth.width));
  out.write(reinterpret_cast<const char*>(depth.data.data()),
            static_cast<std::streamsize>(depth.data.size() * sizeof(float)));
  if (!out) throw IoError(path.string(), "write failed");
}

Image read_nvsd(const fs::path& path) {
  auto in = open_in(path);
  expect_magic(in, "NVSD", path);
  const auto h = get_u32(in, path);
  const auto w = get_u32(in, path);
  Image depth(static_cast<int>(h), static_cast<int>(w), 1);
  read_floats(in, depth.data.data(), depth.data.size(), path);
  return depth;
}

Image read_rgb(const fs::path& path) {
  if (!fs::exists(path)) throw IoError(path.string(), "file not found");
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw IoError(path.string(), "cannot decode image");
  Image rgb(bgr.rows, bgr.cols, 3);
  for (int y = 0; y < bgr.rows; ++y) {
    const auto* row = bgr.ptr<cv::Vec3b>(y);
    for (int x = 0; x < bgr.cols; ++x) {
      for (int c = 0; c < 3; ++c) rgb.at(y, x, c) = row[x][2 - c] / 255.0f;
    }
  }
  return rgb;
}

void write_png8(const fs::path& path, const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw ShapeError("write_png8: expected 1 or 3 channels");
  cv::Mat mat(image.height, image.width, image.channels == 3 ? CV_8UC3 : CV_8UC1);
  for (int y = 0; y < image.height; ++y) {
    auto* row = mat.ptr<std::uint8_t>(y);
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        const float v = std::clamp(image.at(y, x, c), 0.0f, 1.0f);
        const int dst_c = image.channels == 3 ? 2 - c : 0;
        row[x * image.channels + dst_c] = static_cast<std::uint8_t>(std::lround(v * 255.0f));
      }
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), mat)) throw IoError(path.string(), "cannot write PNG");
}

Image read_depth_png16(const fs::path& path, double scale) {
  if (!fs::exists(path)) throw IoError(path.string(), "file not found");
  cv::Mat raw = cv::imread(path.string(), cv::IMREAD_ANYDEPTH | cv::IMREAD_GRAYSCALE);
  if (raw.empty()) throw IoError(path.string(), "cannot decode depth PNG");
  if (raw.depth() != CV_16U) throw IoError(path.string(), "depth PNG must be 16-bit grayscale");
  Image depth(raw.rows, raw.cols, 1);
  for (int y = 0; y < raw.rows; ++y) {
    const auto* row = raw.ptr<std::uint16_t>(y);
    for (int x = 0; x < raw.cols; ++x) depth.at(y, x) = static_cast<float>(row[x] * scale);
  }
  return depth;
}

void write_depth_png16(const fs::path& path, const Image& depth, double scale) {
  require_channels(depth, 1, "write_depth_png16");
  if (!(scale > 0.0)) throw ValidationError("depth scale must be > 0");
  cv::Mat raw(depth.height, depth.width, CV_16UC1);
  for (int y = 0; y < depth.height; ++y) {
    auto* row = raw.ptr<std::uint16_t>(y);
    for (int x = 0; x < depth.width; ++x) {
      const double v = std::round(depth.at(y, x) / scale);
      row[x] = static_cast<std::uint16_t>(std::clamp(v, 0.0, 65535.0));
    }
  }
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  if (!cv::imwrite(path.string(), raw)) throw IoError(path.string(), "cannot write PNG");
}

geometry::Extrinsics read_pose(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open pose file");
  std::array<float, 12> flat{};
  for (float& v : flat) {
    if (!(in >> v)) throw IoError(path.string(), "pose file must hold 12 numbers");
  }
  auto pose = geometry::Extrinsics::from_flat(flat);
  try {
    pose.validate(1e-4);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
  return pose;
}

void write_pose(const fs::path& path, const geometry::Extrinsics& pose) {
  auto out = open_out(path);
  const auto flat = pose.to_flat();
  out << std::setprecision(9);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 4; ++c) out << flat[r * 4 + c] << (c == 3 ? '\n' : ' ');
  }
  if (!out) throw IoError(path.string(), "write failed");
}

double read_scale(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "missing depth scale sidecar");
  double scale = 0.0;
  if (!(in >> scale) || !(scale > 0.0)) throw IoError(path.string(), "depth scale must be a positive number");
  return scale;
}

}  // namespace cheapnvs::io
