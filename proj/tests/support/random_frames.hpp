#pragma once

#include <random>

#include "cheapnvs/geometry.hpp"
#include "cheapnvs/warp_oracle.hpp"

namespace cheapnvs::testing {

/// Random RGB and depth in [0.5, 3), with a foreground patch on half the draws.
inline RGBDFrame random_frame(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<float> col(0.0f, 1.0f);
  std::uniform_real_distribution<float> dep(0.5f, 3.0f);
  RGBDFrame f{Image(h, w, 3), Image(h, w, 1)};
  for (auto& v : f.rgb.data) v = col(rng);
  for (auto& v : f.depth.data) v = dep(rng);
  if (rng() % 2 == 0) {
    const int y0 = static_cast<int>(rng() % h);
    const int x0 = static_cast<int>(rng() % w);
    for (int y = y0; y < h; ++y)
      for (int x = x0; x < w; ++x) f.depth.at(y, x) = 0.6f;
  }
  return f;
}

/// Poses well beyond the narrow-baseline defaults so collisions and holes are common.
inline geometry::Extrinsics random_pose(std::mt19937_64& rng, double max_t = 0.4, double max_deg = 10.0) {
  geometry::PoseSamplerConfig cfg{max_t, max_deg, rng()};
  return geometry::sample_pose(cfg, 1.0);
}

}  // namespace cheapnvs::testing
