#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "cheapnvs/geometry.hpp"

using namespace cheapnvs;
using namespace cheapnvs::geometry;

namespace {

Intrinsics k100() {
  Intrinsics k;
  k.fx = k.fy = 100.0;
  k.cx = k.cy = 50.0;
  k.width = k.height = 101;
  return k;
}

}  // namespace

TEST_CASE("centered intrinsics") {
  const auto k = Intrinsics::centered(64, 48);
  CHECK(k.fx == 64.0);
  CHECK(k.fy == 64.0);
  CHECK(k.cx == doctest::Approx(31.5));
  CHECK(k.cy == doctest::Approx(23.5));
  CHECK_NOTHROW(k.validate());
  auto bad = k;
  bad.fx = 0.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  bad = k;
  bad.cx = 64.0;
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  CHECK_THROWS_AS(Intrinsics::centered(0, 4), ValidationError);
}

TEST_CASE("unproject examples") {
  const auto k = k100();
  CHECK((unproject({k.cx, k.cy}, 2.0, k) - Eigen::Vector3d(0, 0, 2)).norm() < 1e-12);
  CHECK((unproject({k.cx + k.fx, k.cy}, 1.0, k) - Eigen::Vector3d(1, 0, 1)).norm() < 1e-12);
  CHECK((unproject({10, 20}, 3.0, k) - Eigen::Vector3d(-1.2, -0.9, 3.0)).norm() < 1e-12);
  CHECK_THROWS_AS(unproject({1, 1}, 0.0, k), std::domain_error);
  CHECK_THROWS_AS(unproject({1, 1}, -1.0, k), std::domain_error);
}

TEST_CASE("project examples") {
  const auto k = k100();
  const auto a = project({0, 0, 2.0}, k);
  CHECK(a.pixel.x() == doctest::Approx(k.cx));
  CHECK(a.pixel.y() == doctest::Approx(k.cy));
  CHECK(a.depth == 2.0);
  const auto b = project({-1.2, -0.9, 3.0}, k);
  CHECK(b.pixel.x() == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(b.pixel.y() == doctest::Approx(20.0).epsilon(1e-12));
  CHECK_THROWS_AS(project({0, 0, 0}, k), BehindCameraError);
  CHECK_THROWS_AS(project({0, 0, -1}, k), BehindCameraError);
  CHECK_FALSE(try_project({1, 1, -2}, k).has_value());
}

TEST_CASE("project inverts unproject on in-bounds pixels") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto k = Intrinsics::centered(640, 480);
  for (int i = 0; i < 10000; ++i) {
    const Eigen::Vector2d p(u(rng) * 639, u(rng) * 479);
    const double d = 0.01 + u(rng) * 100;
    const auto r = project(unproject(p, d, k), k);
    REQUIRE((r.pixel - p).cwiseAbs().maxCoeff() <= 1e-5);
    REQUIRE(std::abs(r.depth - d) <= 1e-9 * d);
  }
}

TEST_CASE("transform_point examples") {
  const Eigen::Vector3d p(0.3, -2, 5);
  CHECK(transform_point(p, Extrinsics::identity()) == p);
  Extrinsics t;
  t.translation = {0.1, 0, 0};
  CHECK((transform_point({0, 0, 1}, t) - Eigen::Vector3d(0.1, 0, 1)).norm() < 1e-15);
  Extrinsics yaw;
  yaw.rotation = euler_to_rotation(0, std::numbers::pi / 2, 0);
  CHECK((transform_point({0, 0, 1}, yaw) - Eigen::Vector3d(1, 0, 0)).norm() < 1e-6);
}

TEST_CASE("extrinsics validity, inverse and flattening") {
  Extrinsics e;
  e.rotation = euler_to_rotation(0.1, -0.2, 0.3);
  e.translation = {0.5, -1, 2};
  CHECK(e.is_valid());
  const auto id = e.inverse();
  const Eigen::Vector3d p(1, 2, 3);
  CHECK((transform_point(transform_point(p, e), id) - p).norm() < 1e-12);

  const auto flat = e.to_flat();
  CHECK(flat[3] == doctest::Approx(0.5));
  CHECK(flat[7] == doctest::Approx(-1));
  CHECK(flat[11] == doctest::Approx(2));
  CHECK(flat[0] == doctest::Approx(e.rotation(0, 0)));
  CHECK(flat[1] == doctest::Approx(e.rotation(0, 1)));

  Extrinsics bad;
  bad.rotation(0, 0) = 2.0;
  CHECK_FALSE(bad.is_valid());
  CHECK_THROWS_AS(bad.validate(), ValidationError);
  Extrinsics reflect;
  reflect.rotation(2, 2) = -1.0;  // orthonormal but det = -1
  CHECK_FALSE(reflect.is_valid());
}

TEST_CASE("pose sampler: zero ranges give identity") {
  const auto p = sample_pose({0.0, 0.0, 42}, 3.0);
  CHECK(p == Extrinsics::identity());
}

TEST_CASE("pose sampler: determinism") {
  CHECK(sample_pose({0.05, 2.0, 9}, 1.5) == sample_pose({0.05, 2.0, 9}, 1.5));
  CHECK_FALSE(sample_pose({0.05, 2.0, 9}, 1.5) == sample_pose({0.05, 2.0, 10}, 1.5));
  PoseSampler a({0.05, 2.0, 5});
  PoseSampler b({0.05, 2.0, 5});
  for (int i = 0; i < 20; ++i) CHECK(a.next(1.0) == b.next(1.0));
}

TEST_CASE("pose sampler: bounds over 10^4 draws") {
  PoseSampler sampler({0.05, 2.0, 7});
  for (const double median : {1.0, 3.7}) {
    for (int i = 0; i < 10000; ++i) {
      const auto p = sampler.next(median);
      REQUIRE(p.is_valid());
      REQUIRE(p.translation.head<2>().cwiseAbs().maxCoeff() <= 0.05 * median);
      REQUIRE(std::abs(p.translation.z()) <= 0.025 * median);
      REQUIRE(p.rotation_angle_deg() <= 2.0 + 1e-9);
    }
  }
  CHECK_THROWS_AS(sampler.next(0.0), ValidationError);
  CHECK_THROWS_AS(sample_pose({-1.0, 2.0, 0}, 1.0), ValidationError);
}

TEST_CASE("derive_seed separates streams") {
  CHECK(derive_seed(1, 2, 3) == derive_seed(1, 2, 3));
  CHECK(derive_seed(1, 2, 3) != derive_seed(1, 3, 2));
  CHECK(derive_seed(1, 2, 3) != derive_seed(2, 2, 3));
  CHECK(derive_seed(0, 0, 1) != derive_seed(0, 1, 0));
}
