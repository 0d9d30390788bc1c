#pragma once

#include <cstdint>
#include <limits>

#include "cheapnvs/geometry.hpp"
#include "cheapnvs/image.hpp"
#include "cheapnvs/teacher.hpp"

namespace cheapnvs {

/// Source view: RGB in [0, 1] with an aligned, strictly positive depth map.
struct RGBDFrame {
  Image rgb;    // H x W x 3
  Image depth;  // H x W x 1

  int height() const { return rgb.height; }
  int width() const { return rgb.width; }

  /// Throws ShapeError / ValidationError on any broken invariant.
  void validate() const;

  float median_depth() const;
};

/// H x W x 2 backward sampling offsets (dx, dy) in pixels.
using ShiftMap = Image;
/// H x W x 1 blend weight, 1 = visible from the source, 0 = hole.
using OcclusionMask = Image;

inline constexpr float kHoleDepth = std::numeric_limits<float>::max();

struct WarpLabels {
  ShiftMap shift;
  OcclusionMask mask;
  Image warped_rgb;    // H x W x 3, zero at holes
  Image target_depth;  // H x W x 1, kHoleDepth at holes
};

/// Everything the trainer needs for one (frame, pose) pair.
struct TrainingSample {
  RGBDFrame frame;
  geometry::Extrinsics pose;
  WarpLabels labels;
  Image inpaint_gt;  // teacher fill of the warped image
  Image target_gt;   // grid_sample(rgb, shift) * mask + inpaint_gt * (1 - mask)
};

namespace warp {

enum class Border { clamp, zeros };

struct WarpOptions {
  /// Source rows are split across this many workers. Output does not depend on it.
  int threads = 1;
};

/// Depth-based forward warp with nearest-pixel splatting and a z-buffer.
///
/// `pose` is the target camera expressed in the source camera frame, so a
/// source-space point X lands at pose^-1 * X in the target camera. Collisions
/// keep the smallest target depth, then the smallest source raster index.
WarpLabels forward_warp(const RGBDFrame& frame, const geometry::Extrinsics& pose,
                        const geometry::Intrinsics& k, const WarpOptions& options = {});

/// Bilinear backward sampling: out(q) = image(q + shift(q)).
/// With Border::zeros each out-of-range tap contributes zero.
Image grid_sample(const Image& image, const ShiftMap& shift, Border border = Border::clamp);

/// Teacher fill and composed target view around already computed labels.
TrainingSample assemble_sample(const RGBDFrame& frame, const geometry::Extrinsics& pose, WarpLabels labels,
                               const training::InpaintTeacher& teacher);

/// Oracle labels plus teacher fill and the composed target view.
TrainingSample make_labels(const RGBDFrame& frame, const geometry::Extrinsics& pose,
                           const geometry::Intrinsics& k, const training::InpaintTeacher& teacher,
                           const WarpOptions& options = {});

}  // namespace warp
}  // namespace cheapnvs
