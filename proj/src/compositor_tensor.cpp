#include "cheapnvs/compositor_tensor.hpp"

namespace cheapnvs::compositor {

torch::Tensor grid_sample(const torch::Tensor& image, const torch::Tensor& shift, warp::Border border) {
  if (image.dim() != 4 || shift.dim() != 4 || shift.size(1) != 2 || image.size(0) != shift.size(0) ||
      image.size(2) != shift.size(2) || image.size(3) != shift.size(3)) {
    throw ShapeError("grid_sample: expected image B x C x H x W and shift B x 2 x H x W");
  }
  const auto b = image.size(0);
  const auto c = image.size(1);
  const auto h = image.size(2);
  const auto w = image.size(3);
  // Sampling in pixel units with explicit taps, so a zero shift returns the
  // source exactly and the result matches warp::grid_sample.
  auto opts = shift.options();
  auto sx = torch::arange(w, opts).view({1, 1, w}) + shift.select(1, 0);
  auto sy = torch::arange(h, opts).view({1, h, 1}) + shift.select(1, 1);
  if (border == warp::Border::clamp) {
    sx = sx.clamp(0.0, static_cast<double>(w - 1));
    sy = sy.clamp(0.0, static_cast<double>(h - 1));
  }
  const auto x0 = sx.floor().detach();
  const auto y0 = sy.floor().detach();
  const auto ax = (sx - x0).unsqueeze(1);
  const auto ay = (sy - y0).unsqueeze(1);
  const auto flat = image.reshape({b, c, h * w});

  auto tap = [&](const torch::Tensor& ty, const torch::Tensor& tx) {
    const auto inside = (tx >= 0) & (tx <= w - 1) & (ty >= 0) & (ty <= h - 1);
    const auto idx = (ty.clamp(0, h - 1) * w + tx.clamp(0, w - 1)).to(torch::kLong).view({b, 1, h * w});
    auto v = flat.gather(2, idx.expand({b, c, h * w})).view({b, c, h, w});
    return v * inside.unsqueeze(1).to(image.scalar_type());
  };
  return (1.0 - ax) * (1.0 - ay) * tap(y0, x0) + ax * (1.0 - ay) * tap(y0, x0 + 1) +
         (1.0 - ax) * ay * tap(y0 + 1, x0) + ax * ay * tap(y0 + 1, x0 + 1);
}

torch::Tensor blend(const torch::Tensor& warped, const torch::Tensor& mask, const torch::Tensor& inpaint) {
  return (warped * mask + inpaint * (1.0 - mask)).clamp(0.0, 1.0);
}

torch::Tensor synthesize(const torch::Tensor& source, const torch::Tensor& shift, const torch::Tensor& mask,
                         const torch::Tensor& inpaint, warp::Border border) {
  if (mask.dim() != 4 || mask.size(1) != 1) throw ShapeError("synthesize: mask must be B x 1 x H x W");
  if (!inpaint.sizes().equals(source.sizes())) throw ShapeError("synthesize: inpaint/source shape mismatch");
  return blend(grid_sample(source, shift, border), mask, inpaint);
}

}  // namespace cheapnvs::compositor
