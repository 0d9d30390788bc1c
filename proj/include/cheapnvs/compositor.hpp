#pragma once

#include "cheapnvs/warp_oracle.hpp"

namespace cheapnvs::compositor {

/// Blend of a backward-warped source with an inpainting image:
///   out = grid_sample(source, shift) * mask + inpaint * (1 - mask)
/// mask is broadcast over channels; the result is clamped to [0, 1].
Image synthesize(const Image& source, const ShiftMap& shift, const OcclusionMask& mask,
                 const Image& inpaint, warp::Border border = warp::Border::clamp);

/// Warp-then-fill reference: forward warp, then fill the holes of the warped
/// image with the teacher. Keeps warped pixels where the mask is set.
Image warp_then_fill(const RGBDFrame& frame, const geometry::Extrinsics& pose,
                     const geometry::Intrinsics& k, const training::InpaintTeacher& teacher);

}  // namespace cheapnvs::compositor
