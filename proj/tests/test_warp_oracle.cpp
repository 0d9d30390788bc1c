#include <doctest.h>

#include <chrono>
#include <random>

#include "brute_force.hpp"
#include "near.hpp"
#include "cheapnvs/dataset.hpp"
#include "cheapnvs/warp_oracle.hpp"
#include "random_frames.hpp"

using namespace cheapnvs;
using geometry::Extrinsics;
using geometry::Intrinsics;

namespace {

RGBDFrame constant_depth_frame(int h, int w, float z, std::uint64_t seed = 1) {
  std::mt19937_64 rng(seed);
  auto f = testing::random_frame(rng, h, w);
  for (auto& d : f.depth.data) d = z;
  return f;
}

Extrinsics translation(double tx, double ty = 0, double tz = 0) {
  Extrinsics e;
  e.translation = {tx, ty, tz};
  return e;
}

// 4x4, foreground column strip (x = 1) at depth 1 over background depth 2.
RGBDFrame two_level_4x4() {
  RGBDFrame f{Image(4, 4, 3), Image(4, 4, 1, 2.0f)};
  for (int y = 0; y < 4; ++y) {
    f.depth.at(y, 1) = 1.0f;
    for (int x = 0; x < 4; ++x)
      for (int c = 0; c < 3; ++c) f.rgb.at(y, x, c) = static_cast<float>((y * 4 + x) * 3 + c) / 48.0f;
  }
  return f;
}

}  // namespace

TEST_CASE("identity pose leaves the frame unchanged") {
  std::mt19937_64 rng(2);
  const auto f = testing::random_frame(rng, 9, 7);
  const auto labels = warp::forward_warp(f, Extrinsics::identity(), Intrinsics::centered(7, 9));
  for (float m : labels.mask.data) CHECK(m == 1.0f);
  for (float s : labels.shift.data) CHECK(s == 0.0f);
  CHECK(labels.warped_rgb == f.rgb);
  CHECK(labels.target_depth == f.depth);
}

TEST_CASE("plane under x-translation: closed-form shift") {
  // fx = 16, Z = 2, tx = 0.25 -> dx = fx tx / Z = 2 px
  const auto f = constant_depth_frame(16, 16, 2.0f);
  const auto k = Intrinsics::centered(16, 16);
  const auto labels = warp::forward_warp(f, translation(0.25), k);
  for (int y = 0; y < 16; ++y) {
    for (int x = 0; x < 16; ++x) {
      if (x >= 14) {
        CHECK(labels.mask.at(y, x) == 0.0f);
        continue;
      }
      CHECK(labels.mask.at(y, x) == 1.0f);
      CHECK(testing::near(labels.shift.at(y, x, 0), 2.0, 1e-4));
      CHECK(labels.shift.at(y, x, 1) == 0.0f);
    }
  }
  // opposite direction: holes move to the other border
  const auto back = warp::forward_warp(f, translation(-0.25), k);
  for (int y = 0; y < 16; ++y) {
    CHECK(back.mask.at(y, 0) == 0.0f);
    CHECK(back.mask.at(y, 1) == 0.0f);
    CHECK(back.mask.at(y, 2) == 1.0f);
    CHECK(back.shift.at(y, 5, 0) == -2.0f);
  }
}

TEST_CASE("two-level 4x4 case matches the brute-force splat") {
  const auto f = two_level_4x4();
  const auto k = Intrinsics::centered(4, 4);
  const auto pose = translation(0.5);
  const auto labels = warp::forward_warp(f, pose, k);
  CHECK(testing::labels_identical(labels, testing::brute_force_splat(f, pose, k)));
  // fx = 4: background (Z = 2) moves one column left, the foreground strip
  // two columns and off the image, leaving a disocclusion at column 0.
  for (int y = 0; y < 4; ++y) {
    CHECK(labels.mask.at(y, 0) == 0.0f);
    CHECK(labels.mask.at(y, 1) == 1.0f);
    CHECK(labels.mask.at(y, 2) == 1.0f);
    CHECK(labels.mask.at(y, 3) == 0.0f);
    CHECK(labels.shift.at(y, 1, 0) == 1.0f);
    CHECK(labels.shift.at(y, 2, 0) == 1.0f);
    CHECK(labels.target_depth.at(y, 1) == 2.0f);
  }
}

TEST_CASE("brute-force equivalence on random frames up to 8x8") {
  std::mt19937_64 rng(20240601);
  int with_holes = 0;
  int with_collisions = 0;
  for (int i = 0; i < 150; ++i) {
    const int h = 1 + static_cast<int>(rng() % 8);
    const int w = 1 + static_cast<int>(rng() % 8);
    const auto f = testing::random_frame(rng, h, w);
    const auto pose = testing::random_pose(rng);
    const auto k = Intrinsics::centered(w, h);
    const auto fast = warp::forward_warp(f, pose, k);
    const auto ref = testing::brute_force_splat(f, pose, k);
    REQUIRE(testing::labels_identical(fast, ref));
    int covered = 0;
    for (float m : fast.mask.data) covered += m > 0.5f;
    with_holes += covered < h * w;
    with_collisions += covered < h * w && covered > 0;
  }
  // the suite must actually exercise holes and z-buffer decisions
  CHECK(with_holes > 30);
  CHECK(with_collisions > 30);
}

TEST_CASE("z-buffer keeps the nearest surface, ties go to the smaller source index") {
  // Two source pixels mapping to the same target at equal depth: identical
  // depths and a pure z translation keep the tie-break observable.
  RGBDFrame f{Image(1, 3, 3), Image(1, 3, 1, 1.0f)};
  for (int x = 0; x < 3; ++x) f.rgb.at(0, x, 0) = 0.25f * (x + 1);
  Intrinsics k;
  k.fx = k.fy = 1.0;
  k.cx = 1.0;
  k.cy = 0.0;
  k.width = 3;
  k.height = 1;
  // moving the camera back by 1 halves every offset from the centre: x=0 ->
  // 0.5 -> rounds to 1, x=1 -> 1, x=2 -> 1.5 -> rounds to 2.
  const auto labels = warp::forward_warp(f, translation(0, 0, -1.0), k);
  CHECK(labels.mask.at(0, 0) == 0.0f);
  CHECK(labels.mask.at(0, 1) == 1.0f);
  CHECK(labels.shift.at(0, 1, 0) == -1.0f);  // source 0 beats source 1 on index
  CHECK(labels.warped_rgb.at(0, 1, 0) == 0.25f);
  CHECK(labels.shift.at(0, 2, 0) == 0.0f);

  // a nearer source pixel wins regardless of index
  f.depth.at(0, 1) = 0.999f;
  const auto nearer = warp::forward_warp(f, translation(0, 0, -1.0), k);
  CHECK(nearer.warped_rgb.at(0, 1, 0) == 0.5f);
  CHECK(testing::labels_identical(nearer, testing::brute_force_splat(f, translation(0, 0, -1.0), k)));
}

TEST_CASE("invariants: value preservation, hole duality, backward consistency") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 40; ++i) {
    const auto f = testing::random_frame(rng, 12, 10);
    const auto labels = warp::forward_warp(f, testing::random_pose(rng), Intrinsics::centered(10, 12));
    const auto resampled = warp::grid_sample(f.rgb, labels.shift);
    for (int y = 0; y < 12; ++y) {
      for (int x = 0; x < 10; ++x) {
        const bool visible = labels.mask.at(y, x) == 1.0f;
        REQUIRE((labels.mask.at(y, x) == 0.0f || visible));
        REQUIRE((labels.target_depth.at(y, x) == kHoleDepth) == !visible);
        if (!visible) {
          REQUIRE(labels.shift.at(y, x, 0) == 0.0f);
          REQUIRE(labels.shift.at(y, x, 1) == 0.0f);
          for (int c = 0; c < 3; ++c) REQUIRE(labels.warped_rgb.at(y, x, c) == 0.0f);
          continue;
        }
        const int sx = x + static_cast<int>(labels.shift.at(y, x, 0));
        const int sy = y + static_cast<int>(labels.shift.at(y, x, 1));
        REQUIRE(sx >= 0);
        REQUIRE(sx < 10);
        REQUIRE(sy >= 0);
        REQUIRE(sy < 12);
        for (int c = 0; c < 3; ++c) {
          REQUIRE(labels.warped_rgb.at(y, x, c) == f.rgb.at(sy, sx, c));
          REQUIRE(resampled.at(y, x, c) == labels.warped_rgb.at(y, x, c));
        }
      }
    }
  }
}

TEST_CASE("forward_warp is identical across thread counts") {
  const auto f = dataset::synth_scene(dataset::SceneKind::step, 48, 5);
  const auto k = Intrinsics::centered(48, 48);
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    const auto pose = testing::random_pose(rng, 0.2, 5.0);
    const auto one = warp::forward_warp(f, pose, k, {1});
    for (int threads : {2, 3, 7, 48, 100}) CHECK(testing::labels_identical(one, warp::forward_warp(f, pose, k, {threads})));
    CHECK(testing::labels_identical(one, warp::forward_warp(f, pose, k)));
  }
}

TEST_CASE("forward_warp rejects invalid input") {
  auto f = constant_depth_frame(4, 4, 1.0f);
  const auto k = Intrinsics::centered(4, 4);
  CHECK_THROWS_AS(warp::forward_warp(f, Extrinsics::identity(), Intrinsics::centered(5, 4)), ShapeError);
  Extrinsics bad;
  bad.rotation(0, 0) = 3.0;
  CHECK_THROWS_AS(warp::forward_warp(f, bad, k), ValidationError);
  f.depth.at(1, 1) = 0.0f;
  CHECK_THROWS_AS(warp::forward_warp(f, Extrinsics::identity(), k), ValidationError);
  f.depth.at(1, 1) = 1.0f;
  f.rgb.at(0, 0, 0) = 1.5f;
  CHECK_THROWS_AS(warp::forward_warp(f, Extrinsics::identity(), k), ValidationError);
}

TEST_CASE("grid_sample hand cases") {
  SUBCASE("zero shift is the identity") {
    std::mt19937_64 rng(4);
    const auto f = testing::random_frame(rng, 5, 6);
    CHECK(warp::grid_sample(f.rgb, Image(5, 6, 2)) == f.rgb);
    CHECK(warp::grid_sample(f.rgb, Image(5, 6, 2), warp::Border::zeros) == f.rgb);
  }
  SUBCASE("half-pixel shift on a 1x2 image") {
    Image img(1, 2, 1);
    img.at(0, 0) = 0.2f;
    img.at(0, 1) = 0.8f;
    Image shift(1, 2, 2);
    shift.at(0, 0, 0) = 0.5f;
    const auto out = warp::grid_sample(img, shift);
    CHECK(testing::near(out.at(0, 0), 0.5, 1e-6));
    CHECK(out.at(0, 1) == 0.8f);
  }
  SUBCASE("clamp past the right border repeats the last column") {
    Image img(2, 3, 1);
    for (int i = 0; i < 6; ++i) img.data[static_cast<std::size_t>(i)] = 0.1f * (i + 1);
    Image shift(2, 3, 2);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 3; ++x) shift.at(y, x, 0) = 5.0f;
    const auto out = warp::grid_sample(img, shift);
    for (int y = 0; y < 2; ++y)
      for (int x = 0; x < 3; ++x) CHECK(out.at(y, x) == img.at(y, 2));
    const auto zeros = warp::grid_sample(img, shift, warp::Border::zeros);
    for (float v : zeros.data) CHECK(v == 0.0f);
  }
  SUBCASE("bilinear weights in both axes") {
    Image img(2, 2, 1);
    img.at(0, 0) = 0.0f;
    img.at(0, 1) = 1.0f;
    img.at(1, 0) = 0.5f;
    img.at(1, 1) = 0.25f;
    Image shift(2, 2, 2);
    shift.at(0, 0, 0) = 0.25f;
    shift.at(0, 0, 1) = 0.75f;
    // (1-a)(1-b) v00 + a(1-b) v01 + (1-a) b v10 + a b v11 with a = 0.25, b = 0.75
    const double expect = 0.75 * 0.25 * 0.0 + 0.25 * 0.25 * 1.0 + 0.75 * 0.75 * 0.5 + 0.25 * 0.75 * 0.25;
    CHECK(testing::near(warp::grid_sample(img, shift).at(0, 0), expect, 1e-6));
  }
  SUBCASE("zeros border fades partially outside taps") {
    Image img(1, 2, 1, 1.0f);
    Image shift(1, 2, 2);
    shift.at(0, 1, 0) = 0.25f;  // samples x = 1.25: 0.75 of the last pixel
    CHECK(testing::near(warp::grid_sample(img, shift, warp::Border::zeros).at(0, 1), 0.75, 1e-6));
    CHECK(warp::grid_sample(img, shift, warp::Border::clamp).at(0, 1) == 1.0f);
  }
  SUBCASE("shape errors") {
    CHECK_THROWS_AS(warp::grid_sample(Image(2, 2, 3), Image(2, 3, 2)), ShapeError);
    CHECK_THROWS_AS(warp::grid_sample(Image(2, 2, 3), Image(2, 2, 1)), ShapeError);
  }
}

TEST_CASE("make_labels examples") {
  const auto k4 = Intrinsics::centered(4, 4);
  SUBCASE("identity pose: target is the source") {
    std::mt19937_64 rng(8);
    const auto f = testing::random_frame(rng, 6, 6);
    const auto s = warp::make_labels(f, Extrinsics::identity(), Intrinsics::centered(6, 6),
                                     training::constant_fill_teacher({1, 0, 0}));
    CHECK(s.target_gt == f.rgb);
  }
  SUBCASE("constant colour with constant fill stays constant") {
    std::mt19937_64 rng(9);
    for (int i = 0; i < 10; ++i) {
      auto f = testing::random_frame(rng, 8, 8);
      for (std::size_t p = 0; p < f.rgb.pixels(); ++p) {
        f.rgb.data[p * 3] = 0.3f;
        f.rgb.data[p * 3 + 1] = 0.6f;
        f.rgb.data[p * 3 + 2] = 0.9f;
      }
      const auto s = warp::make_labels(f, testing::random_pose(rng), Intrinsics::centered(8, 8),
                                       training::constant_fill_teacher({0.3f, 0.6f, 0.9f}));
      for (std::size_t p = 0; p < s.target_gt.pixels(); ++p) {
        CHECK(s.target_gt.data[p * 3] == doctest::Approx(0.3f));
        CHECK(s.target_gt.data[p * 3 + 1] == doctest::Approx(0.6f));
        CHECK(s.target_gt.data[p * 3 + 2] == doctest::Approx(0.9f));
      }
    }
  }
  SUBCASE("two-level case with mean fill") {
    const auto f = two_level_4x4();
    const auto s = warp::make_labels(f, translation(0.5), k4, training::mean_fill_teacher());
    const auto ref = testing::brute_force_splat(f, translation(0.5), k4);
    double sum[3] = {0, 0, 0};
    int n = 0;
    for (int i = 0; i < 16; ++i) {
      if (ref.mask.data[static_cast<std::size_t>(i)] < 0.5f) continue;
      ++n;
      for (int c = 0; c < 3; ++c) sum[c] += ref.warped_rgb.data[static_cast<std::size_t>(i * 3 + c)];
    }
    REQUIRE(n > 0);
    REQUIRE(n < 16);
    for (int i = 0; i < 16; ++i) {
      const auto p = static_cast<std::size_t>(i);
      for (int c = 0; c < 3; ++c) {
        const float got = s.inpaint_gt.data[p * 3 + c];
        if (ref.mask.data[p] < 0.5f) {
          CHECK(got == doctest::Approx(sum[c] / n).epsilon(1e-6));
          CHECK(s.target_gt.data[p * 3 + c] == doctest::Approx(sum[c] / n).epsilon(1e-6));
        } else {
          CHECK(s.target_gt.data[p * 3 + c] == ref.warped_rgb.data[p * 3 + c]);
        }
      }
    }
  }
}
