#pragma once

#include <filesystem>

#include "cheapnvs/geometry.hpp"
#include "cheapnvs/image.hpp"

namespace cheapnvs::io {

namespace fs = std::filesystem;

// Raw float32 containers, little-endian.
//   NVSS: "NVSS" u32 H, u32 W, u32 C, then C planes of H*W float32 (planar).
//   NVSD: "NVSD" u32 H, u32 W, then H*W float32.
void write_nvss(const fs::path& path, const Image& image);
Image read_nvss(const fs::path& path);

void write_nvsd(const fs::path& path, const Image& depth);
Image read_nvsd(const fs::path& path);

/// 8-bit RGB (PNG/JPEG) to [0, 1]. Grayscale files are expanded to 3 channels.
Image read_rgb(const fs::path& path);

/// Writes 1- or 3-channel [0, 1] images as 8-bit PNG (round to nearest).
void write_png8(const fs::path& path, const Image& image);

/// 16-bit grayscale PNG multiplied by `scale`.
Image read_depth_png16(const fs::path& path, double scale);
/// Inverse of read_depth_png16: round(depth / scale) clamped to [0, 65535].
void write_depth_png16(const fs::path& path, const Image& depth, double scale);

/// Pose sidecar: 12 whitespace-separated floats, row-major [R|t].
geometry::Extrinsics read_pose(const fs::path& path);
void write_pose(const fs::path& path, const geometry::Extrinsics& pose);

/// Scale sidecar next to a 16-bit depth PNG: a single number in a text file.
double read_scale(const fs::path& path);

}  // namespace cheapnvs::io
