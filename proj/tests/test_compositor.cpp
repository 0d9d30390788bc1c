#include "torch_doctest.hpp"

#include <random>

#include "cheapnvs/compositor.hpp"
#include "cheapnvs/compositor_tensor.hpp"
#include "cheapnvs/tensor_image.hpp"
#include "near.hpp"
#include "random_frames.hpp"

using namespace cheapnvs;
using geometry::Intrinsics;

namespace {

Image random_shift(std::mt19937_64& rng, int h, int w, float range) {
  std::uniform_real_distribution<float> u(-range, range);
  Image s(h, w, 2);
  for (auto& v : s.data) v = u(rng);
  return s;
}

Image random_mask(std::mt19937_64& rng, int h, int w) {
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  Image m(h, w, 1);
  for (auto& v : m.data) v = u(rng);
  return m;
}

}  // namespace

TEST_CASE("synthesize boundary cases") {
  std::mt19937_64 rng(1);
  const auto f = testing::random_frame(rng, 6, 5);
  const auto inpaint = testing::random_frame(rng, 6, 5).rgb;
  const auto shift = random_shift(rng, 6, 5, 2.0f);
  CHECK(compositor::synthesize(f.rgb, shift, Image(6, 5, 1, 1.0f), inpaint) == warp::grid_sample(f.rgb, shift));
  CHECK(compositor::synthesize(f.rgb, shift, Image(6, 5, 1, 0.0f), inpaint) == inpaint);
}

TEST_CASE("synthesize stays inside the hull of warped and inpaint values") {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 20; ++i) {
    const auto f = testing::random_frame(rng, 7, 8);
    const auto inpaint = testing::random_frame(rng, 7, 8).rgb;
    const auto shift = random_shift(rng, 7, 8, 3.0f);
    const auto mask = random_mask(rng, 7, 8);
    const auto out = compositor::synthesize(f.rgb, shift, mask, inpaint);
    const auto warped = warp::grid_sample(f.rgb, shift);
    for (std::size_t j = 0; j < out.data.size(); ++j) {
      const float lo = std::min(warped.data[j], inpaint.data[j]);
      const float hi = std::max(warped.data[j], inpaint.data[j]);
      REQUIRE(out.data[j] >= lo - 1e-6f);
      REQUIRE(out.data[j] <= hi + 1e-6f);
    }
  }
}

TEST_CASE("synthesize input checks") {
  CHECK_THROWS_AS(compositor::synthesize(Image(2, 2, 3), Image(2, 2, 2), Image(2, 2, 1, 1.5f), Image(2, 2, 3)),
                  ValidationError);
  CHECK_THROWS_AS(compositor::synthesize(Image(2, 2, 3), Image(2, 2, 2), Image(2, 2, 3), Image(2, 2, 3)), ShapeError);
  CHECK_THROWS_AS(compositor::synthesize(Image(2, 2, 3), Image(2, 2, 2), Image(2, 2, 1), Image(2, 3, 3)), ShapeError);
}

TEST_CASE("oracle components reproduce warp-then-fill exactly") {
  std::mt19937_64 rng(3);
  const auto k = Intrinsics::centered(16, 16);
  int with_holes = 0;
  for (int i = 0; i < 60; ++i) {
    const auto f = testing::random_frame(rng, 16, 16);
    const auto pose = testing::random_pose(rng, 0.2, 5.0);
    const auto teacher = i % 2 ? training::classical_fill_teacher() : training::mean_fill_teacher();
    const auto sample = warp::make_labels(f, pose, k, teacher);
    const auto seq = compositor::warp_then_fill(f, pose, k, teacher);
    REQUIRE(compositor::synthesize(f.rgb, sample.labels.shift, sample.labels.mask, sample.inpaint_gt) == seq);
    REQUIRE(sample.target_gt == seq);
    for (float m : sample.labels.mask.data) {
      if (m == 0.0f) {
        ++with_holes;
        break;
      }
    }
  }
  CHECK(with_holes > 40);
}

TEST_CASE("tensor grid_sample agrees with the plain implementation") {
  std::mt19937_64 rng(4);
  for (int i = 0; i < 30; ++i) {
    const int h = 2 + static_cast<int>(rng() % 9);
    const int w = 2 + static_cast<int>(rng() % 9);
    const auto img = testing::random_frame(rng, h, w).rgb;
    const auto shift = random_shift(rng, h, w, 4.0f);
    for (const auto border : {warp::Border::clamp, warp::Border::zeros}) {
      const auto plain = warp::grid_sample(img, shift, border);
      const auto tensor = to_image(compositor::grid_sample(to_tensor(img), to_tensor(shift), border));
      REQUIRE(plain.same_shape(tensor));
      for (std::size_t j = 0; j < plain.data.size(); ++j) REQUIRE(testing::near(plain.data[j], tensor.data[j], 1e-6));
    }
  }
}

TEST_CASE("tensor grid_sample hand cases") {
  auto img = torch::tensor({0.2f, 0.8f}).view({1, 1, 1, 2});
  auto shift = torch::zeros({1, 2, 1, 2});
  CHECK(torch::equal(compositor::grid_sample(img, shift), img));
  shift[0][0][0][0] = 0.5f;
  auto out = compositor::grid_sample(img, shift);
  CHECK(testing::near(out[0][0][0][0].item<float>(), 0.5, 1e-6));

  auto wide = torch::arange(6, torch::kFloat32).view({1, 1, 2, 3}) / 10.0;
  auto push = torch::zeros({1, 2, 2, 3});
  push.select(1, 0).fill_(5.0);
  auto clamped = compositor::grid_sample(wide, push);
  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 3; ++x) CHECK(clamped[0][0][y][x].item<float>() == wide[0][0][y][2].item<float>());
  CHECK_THROWS_AS(compositor::grid_sample(wide, torch::zeros({1, 1, 2, 3})), ShapeError);
}

TEST_CASE("tensor synthesize is differentiable in shift, mask and inpaint") {
  std::mt19937_64 rng(5);
  const auto img = to_tensor(testing::random_frame(rng, 6, 6).rgb);
  auto shift = (torch::rand({1, 2, 6, 6}) - 0.5).set_requires_grad(true);
  auto mask = torch::full({1, 1, 6, 6}, 0.5).set_requires_grad(true);
  auto inpaint = torch::full({1, 3, 6, 6}, 0.5).set_requires_grad(true);
  auto out = compositor::synthesize(img, shift, mask, inpaint);
  (out * torch::rand_like(out)).sum().backward();
  CHECK(shift.grad().abs().sum().item<double>() > 0.0);
  CHECK(mask.grad().abs().sum().item<double>() > 0.0);
  CHECK(inpaint.grad().abs().sum().item<double>() > 0.0);
}

TEST_CASE("tensor synthesize matches the plain compositor") {
  std::mt19937_64 rng(6);
  for (int i = 0; i < 10; ++i) {
    const auto f = testing::random_frame(rng, 8, 9);
    const auto inpaint = testing::random_frame(rng, 8, 9).rgb;
    const auto shift = random_shift(rng, 8, 9, 2.0f);
    const auto mask = random_mask(rng, 8, 9);
    const auto plain = compositor::synthesize(f.rgb, shift, mask, inpaint);
    const auto tensor =
        to_image(compositor::synthesize(to_tensor(f.rgb), to_tensor(shift), to_tensor(mask), to_tensor(inpaint)));
    for (std::size_t j = 0; j < plain.data.size(); ++j) REQUIRE(testing::near(plain.data[j], tensor.data[j], 1e-6));
  }
}
