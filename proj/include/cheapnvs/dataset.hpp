#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cheapnvs/warp_oracle.hpp"

namespace cheapnvs::dataset {

namespace fs = std::filesystem;

struct SampleRecord {
  std::string name;  // file stem shared by image, depth and pose
  fs::path image;
  fs::path depth;  // .nvsd, or 16-bit .png with a sibling .scale file
  std::optional<fs::path> pose;
};

/// Loads RGB and depth; non-positive depth is replaced with the 1st-percentile
/// positive depth. Throws IoError for missing/unreadable files and
/// ValidationError for resolution mismatch or an all-nonpositive depth map.
RGBDFrame load_sample(const SampleRecord& record);

/// Lists `{root}/rgb/*.png|*.jpg`, pairing each with `{root}/depth/<stem>.nvsd`
/// (preferred) or `<stem>.png`, and `{root}/pose/<stem>.txt` when present.
/// Records are sorted by name.
std::vector<SampleRecord> scan_directory(const fs::path& root);

std::vector<RGBDFrame> load_all(const std::vector<SampleRecord>& records);

/// Depth path of a record's 16-bit PNG scale sidecar (`<stem>.scale`).
fs::path scale_sidecar(const fs::path& depth_png);

enum class SceneKind { plane, step, gradient };

SceneKind parse_scene_kind(const std::string& name);

/// Deterministic smooth texture over a simple depth layout:
///   plane    depth = 1 everywhere
///   step     depth 1 on a seeded vertical band, 2 elsewhere
///   gradient depth ramps linearly from 1 (top) to 2 (bottom)
RGBDFrame synth_scene(SceneKind kind, int size, std::uint64_t seed);

}  // namespace cheapnvs::dataset
