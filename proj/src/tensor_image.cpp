#include "cheapnvs/tensor_image.hpp"

#include "cheapnvs/errors.hpp"

namespace cheapnvs {

torch::Tensor to_tensor(const Image& image) {
  auto hwc = torch::from_blob(const_cast<float*>(image.data.data()),
                              {image.height, image.width, image.channels}, torch::kFloat32);
  return hwc.permute({2, 0, 1}).unsqueeze(0).contiguous().clone();
}

Image to_image(const torch::Tensor& tensor) {
  auto t = tensor.detach();
  if (t.dim() == 4) {
    if (t.size(0) != 1) throw ShapeError("to_image: batch size must be 1");
    t = t.squeeze(0);
  }
  if (t.dim() != 3) throw ShapeError("to_image: expected a CHW tensor");
  t = t.to(torch::kCPU, torch::kFloat32).permute({1, 2, 0}).contiguous();
  Image out(static_cast<int>(t.size(0)), static_cast<int>(t.size(1)), static_cast<int>(t.size(2)));
  std::memcpy(out.data.data(), t.data_ptr<float>(), out.data.size() * sizeof(float));
  return out;
}

torch::Tensor pose_tensor(const geometry::Extrinsics& pose) {
  const auto flat = pose.to_flat();
  return torch::from_blob(const_cast<float*>(flat.data()), {1, 12}, torch::kFloat32).clone();
}

}  // namespace cheapnvs
