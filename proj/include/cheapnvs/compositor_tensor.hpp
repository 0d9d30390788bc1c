#pragma once

#include <torch/torch.h>

#include "cheapnvs/warp_oracle.hpp"

namespace cheapnvs::compositor {

/// Differentiable bilinear sampling of `image` (B x C x H x W) at pixel
/// offsets `shift` (B x 2 x H x W, dx then dy). Gradients flow to both inputs.
///
/// Matches warp::grid_sample on images whose sides are > 1 px. A side of
/// length 1 always samples index 0.
torch::Tensor grid_sample(const torch::Tensor& image, const torch::Tensor& shift,
                          warp::Border border = warp::Border::clamp);

/// grid_sample(source, shift) * mask + inpaint * (1 - mask), clamped to [0, 1].
/// mask is B x 1 x H x W and broadcast over channels.
torch::Tensor synthesize(const torch::Tensor& source, const torch::Tensor& shift, const torch::Tensor& mask,
                         const torch::Tensor& inpaint, warp::Border border = warp::Border::clamp);

/// Blend step alone, for callers that already materialised the warped image.
torch::Tensor blend(const torch::Tensor& warped, const torch::Tensor& mask, const torch::Tensor& inpaint);

}  // namespace cheapnvs::compositor
