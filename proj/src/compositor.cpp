#include "cheapnvs/compositor.hpp"

#include <algorithm>

namespace cheapnvs::compositor {

Image synthesize(const Image& source, const ShiftMap& shift, const OcclusionMask& mask,
                 const Image& inpaint, warp::Border border) {
  require_channels(mask, 1, "synthesize mask");
  require_same_shape(source, inpaint, "synthesize source/inpaint");
  require_same_shape(source, mask, "synthesize source/mask", false);
  for (float m : mask.data) {
    if (!(m >= 0.0f && m <= 1.0f)) throw ValidationError("synthesize: mask outside [0, 1]");
  }
  const Image warped = warp::grid_sample(source, shift, border);
  Image out(source.height, source.width, source.channels);
  for (std::size_t i = 0; i < source.pixels(); ++i) {
    const float m = mask.data[i];
    for (int c = 0; c < source.channels; ++c) {
      const std::size_t j = i * source.channels + c;
      out.data[j] = std::clamp(warped.data[j] * m + inpaint.data[j] * (1.0f - m), 0.0f, 1.0f);
    }
  }
  return out;
}

Image warp_then_fill(const RGBDFrame& frame, const geometry::Extrinsics& pose,
                     const geometry::Intrinsics& k, const training::InpaintTeacher& teacher) {
  const WarpLabels labels = warp::forward_warp(frame, pose, k);
  Image holes(frame.height(), frame.width(), 1);
  for (std::size_t i = 0; i < holes.data.size(); ++i) holes.data[i] = labels.mask.data[i] > 0.5f ? 0.0f : 1.0f;
  const Image filled = teacher(labels.warped_rgb, holes);
  Image out = labels.warped_rgb;
  for (std::size_t i = 0; i < holes.data.size(); ++i) {
    if (holes.data[i] == 0.0f) continue;
    for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = filled.data[i * 3 + c];
  }
  return out;
}

}  // namespace cheapnvs::compositor
