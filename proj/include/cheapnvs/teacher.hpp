#pragma once

#include <array>
#include <functional>

#include "cheapnvs/image.hpp"

namespace cheapnvs::training {

/// Fill function producing inpainting pseudo-labels.
///
/// Arguments are the masked warped image (H x W x 3) and the hole mask
/// (H x W x 1, 1 = hole). The result must lie in [0, 1] and agree with the
/// input wherever the hole mask is 0.
using InpaintTeacher = std::function<Image(const Image& masked, const Image& holes)>;

/// Onion-peel neighbourhood averaging: each pass fills every hole pixel that
/// touches a known pixel (8-neighbourhood) with the mean of its known
/// neighbours, until no holes remain. Throws std::runtime_error if the image
/// has no visible pixel at all.
Image classical_fill(const Image& masked, const Image& holes);

/// Every hole pixel becomes the per-channel mean of the visible pixels.
Image mean_fill(const Image& masked, const Image& holes);

InpaintTeacher classical_fill_teacher();
InpaintTeacher mean_fill_teacher();
InpaintTeacher constant_fill_teacher(std::array<float, 3> color);

}  // namespace cheapnvs::training
