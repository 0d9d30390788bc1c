#include "cheapnvs/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include <Eigen/Geometry>

namespace cheapnvs::geometry {

Intrinsics Intrinsics::centered(int width, int height) {
  if (width <= 0 || height <= 0) throw ValidationError("intrinsics: image size must be positive");
  Intrinsics k;
  k.width = width;
  k.height = height;
  k.fx = k.fy = static_cast<double>(std::max(width, height));
  k.cx = (width - 1) / 2.0;
  k.cy = (height - 1) / 2.0;
  return k;
}

void Intrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) throw ValidationError("intrinsics: focal lengths must be > 0");
  if (width <= 0 || height <= 0) throw ValidationError("intrinsics: image size must be positive");
  if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height)) {
    throw ValidationError("intrinsics: principal point outside the image");
  }
}

std::array<float, 6> Intrinsics::to_flat() const {
  return {static_cast<float>(fx), static_cast<float>(fy), static_cast<float>(cx),
          static_cast<float>(cy), static_cast<float>(width), static_cast<float>(height)};
}

Intrinsics Intrinsics::from_flat(const std::array<float, 6>& flat) {
  Intrinsics k;
  k.fx = flat[0];
  k.fy = flat[1];
  k.cx = flat[2];
  k.cy = flat[3];
  k.width = static_cast<int>(flat[4]);
  k.height = static_cast<int>(flat[5]);
  return k;
}

bool Extrinsics::is_valid(double tol) const {
  if (!rotation.allFinite() || !translation.allFinite()) return false;
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
}

void Extrinsics::validate(double tol) const {
  if (!is_valid(tol)) throw ValidationError("extrinsics: rotation is not orthonormal with det 1");
}

Extrinsics Extrinsics::inverse() const {
  Extrinsics inv;
  inv.rotation = rotation.transpose();
  inv.translation = -(inv.rotation * translation);
  return inv;
}

double Extrinsics::rotation_angle_deg() const {
  const double c = std::clamp((rotation.trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

std::array<float, 12> Extrinsics::to_flat() const {
  std::array<float, 12> flat{};
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) flat[r * 4 + c] = static_cast<float>(rotation(r, c));
    flat[r * 4 + 3] = static_cast<float>(translation(r));
  }
  return flat;
}

Extrinsics Extrinsics::from_flat(const std::array<float, 12>& flat) {
  Extrinsics e;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) e.rotation(r, c) = flat[r * 4 + c];
    e.translation(r) = flat[r * 4 + 3];
  }
  return e;
}

void PoseSamplerConfig::validate() const {
  if (!(max_translation >= 0.0) || !(max_rotation_deg >= 0.0)) {
    throw ValidationError("pose sampler: maxima must be >= 0");
  }
}

Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const Intrinsics& k) {
  if (!(depth > 0.0)) throw std::domain_error("unproject: depth must be > 0");
  return {(pixel.x() - k.cx) * depth / k.fx, (pixel.y() - k.cy) * depth / k.fy, depth};
}

std::optional<Projection> try_project(const Eigen::Vector3d& point, const Intrinsics& k) {
  if (!(point.z() > 0.0)) return std::nullopt;
  return Projection{{k.fx * point.x() / point.z() + k.cx, k.fy * point.y() / point.z() + k.cy},
                    point.z()};
}

Projection project(const Eigen::Vector3d& point, const Intrinsics& k) {
  auto p = try_project(point, k);
  if (!p) throw BehindCameraError();
  return *p;
}

Eigen::Vector3d transform_point(const Eigen::Vector3d& point, const Extrinsics& pose) {
  return pose.rotation * point + pose.translation;
}

Eigen::Matrix3d euler_to_rotation(double rx, double ry, double rz) {
  return (Eigen::AngleAxisd(rz, Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(ry, Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rx, Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

PoseSampler::PoseSampler(const PoseSamplerConfig& cfg) : cfg_(cfg), rng_(cfg.seed) {
  cfg_.validate();
}

Extrinsics PoseSampler::next(double median_depth) {
  if (!(median_depth > 0.0)) throw ValidationError("pose sampler: median depth must be > 0");
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  Extrinsics pose;
  const double span = cfg_.max_translation * median_depth;
  pose.translation = {unit(rng_) * span, unit(rng_) * span, 0.5 * unit(rng_) * span};

  const double max_rad = cfg_.max_rotation_deg * std::numbers::pi / 180.0;
  if (max_rad > 0.0) {
    // ~52% acceptance for small angles; the loop terminates with probability 1.
    for (;;) {
      const double rx = unit(rng_) * max_rad;
      const double ry = unit(rng_) * max_rad;
      const double rz = unit(rng_) * max_rad;
      Extrinsics candidate;
      candidate.rotation = euler_to_rotation(rx, ry, rz);
      if (candidate.rotation_angle_deg() <= cfg_.max_rotation_deg) {
        pose.rotation = candidate.rotation;
        break;
      }
    }
  }
  return pose;
}

Extrinsics sample_pose(const PoseSamplerConfig& cfg, double median_depth) {
  return PoseSampler(cfg).next(median_depth);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  // splitmix64 finaliser over a simple combination
  auto mix = [](std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  };
  return mix(mix(mix(seed) ^ a) ^ (b * 0xd6e8feb86659fd93ULL));
}

}  // namespace cheapnvs::geometry
