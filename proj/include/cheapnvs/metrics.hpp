#pragma once

#include "cheapnvs/image.hpp"

namespace cheapnvs::eval {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(1 / MSE) over all pixels and channels, capped at kPsnrCap.
double psnr(const Image& a, const Image& b);

/// PSNR restricted to pixels where `region` > 0.5 (all channels of those
/// pixels). Returns the cap when the region is empty or the MSE is zero.
double masked_psnr(const Image& a, const Image& b, const Image& region);

/// Mean SSIM over the luma channel with an 11x11 Gaussian window
/// (sigma 1.5, valid region), C1 = 0.01^2, C2 = 0.03^2. Single-channel
/// inputs are used as luma directly.
double ssim(const Image& a, const Image& b);

/// Intersection over union of the foreground (> 0.5) of two masks. 1 when
/// both are empty.
double mask_iou(const Image& a, const Image& b);

}  // namespace cheapnvs::eval
