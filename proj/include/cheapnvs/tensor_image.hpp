#pragma once

#include <torch/torch.h>

#include "cheapnvs/geometry.hpp"
#include "cheapnvs/image.hpp"

namespace cheapnvs {

/// HWC Image -> 1 x C x H x W float tensor (copy).
torch::Tensor to_tensor(const Image& image);

/// 1 x C x H x W (or C x H x W) tensor -> HWC Image (copy, converted to float).
Image to_image(const torch::Tensor& tensor);

/// Pose as a 1 x 12 row-major [R|t] tensor.
torch::Tensor pose_tensor(const geometry::Extrinsics& pose);

}  // namespace cheapnvs
