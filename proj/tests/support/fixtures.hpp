#pragma once

#include <filesystem>
#include <vector>

#include "cheapnvs/dataset.hpp"

namespace cheapnvs::testing {

inline std::filesystem::path data_dir() { return CHEAPNVS_TEST_DATA; }

/// Four synthetic scenes plus the four real fixtures, all 64x64.
inline std::vector<RGBDFrame> tiny_corpus(std::uint64_t seed = 11) {
  using dataset::SceneKind;
  std::vector<RGBDFrame> frames;
  const SceneKind kinds[] = {SceneKind::plane, SceneKind::step, SceneKind::gradient, SceneKind::step};
  for (std::uint64_t i = 0; i < 4; ++i) frames.push_back(dataset::synth_scene(kinds[i], 64, seed + i));
  for (auto& f : dataset::load_all(dataset::scan_directory(data_dir() / "real"))) frames.push_back(std::move(f));
  return frames;
}

}  // namespace cheapnvs::testing
