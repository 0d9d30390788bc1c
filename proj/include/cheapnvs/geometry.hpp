#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>

#include <Eigen/Core>

#include "cheapnvs/errors.hpp"

namespace cheapnvs::geometry {

/// Pinhole intrinsics in pixels.
struct Intrinsics {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 1;
  int height = 1;

  /// fx = fy = max(W, H), principal point at the image centre.
  static Intrinsics centered(int width, int height);

  /// Throws ValidationError if focal lengths are non-positive or the principal
  /// point lies outside the image.
  void validate() const;

  /// [fx, fy, cx, cy, width, height]
  std::array<float, 6> to_flat() const;
  static Intrinsics from_flat(const std::array<float, 6>& flat);
};

/// Rigid transform [R|t]. Row-major flattening gives the 12-D pose vector.
struct Extrinsics {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  static Extrinsics identity() { return {}; }

  /// R^T R = I and det R = 1 within `tol`.
  bool is_valid(double tol = 1e-6) const;
  void validate(double tol = 1e-6) const;

  Extrinsics inverse() const;

  /// Rotation angle in degrees.
  double rotation_angle_deg() const;

  std::array<float, 12> to_flat() const;
  static Extrinsics from_flat(const std::array<float, 12>& flat);

  bool operator==(const Extrinsics& other) const {
    return rotation == other.rotation && translation == other.translation;
  }
};

struct PoseSamplerConfig {
  double max_translation = 0.05;  // fraction of median scene depth
  double max_rotation_deg = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

class BehindCameraError : public ValidationError {
 public:
  BehindCameraError() : ValidationError("point is behind the camera (z <= 0)") {}
};

struct Projection {
  Eigen::Vector2d pixel;
  double depth = 0.0;
};

/// ((x - cx) d / fx, (y - cy) d / fy, d). Throws std::domain_error if depth <= 0.
Eigen::Vector3d unproject(const Eigen::Vector2d& pixel, double depth, const Intrinsics& k);

/// Throws BehindCameraError if point.z <= 0.
Projection project(const Eigen::Vector3d& point, const Intrinsics& k);

/// Non-throwing variant for hot loops; nullopt when point.z <= 0.
std::optional<Projection> try_project(const Eigen::Vector3d& point, const Intrinsics& k);

/// R * point + t
Eigen::Vector3d transform_point(const Eigen::Vector3d& point, const Extrinsics& pose);

/// Rz(yaw_z) * Ry(yaw_y) * Rx(roll_x), angles in radians.
Eigen::Matrix3d euler_to_rotation(double rx, double ry, double rz);

/// Narrow-baseline relative pose generator. Owns its random stream so
/// concurrent callers never share state.
class PoseSampler {
 public:
  explicit PoseSampler(const PoseSamplerConfig& cfg);

  /// Translation uniform in [-m, m]^3 with m = max_translation * median_depth
  /// and the z component halved; rotation from uniform Euler angles in
  /// [-max_rotation_deg, max_rotation_deg], redrawn until the composed
  /// rotation angle is within the same bound.
  Extrinsics next(double median_depth);

 private:
  PoseSamplerConfig cfg_;
  std::mt19937_64 rng_;
};

/// One draw from a fresh sampler seeded with cfg.seed.
Extrinsics sample_pose(const PoseSamplerConfig& cfg, double median_depth);

/// Mixes (seed, a, b) into an independent stream seed. Used to key per-sample
/// randomness so results do not depend on evaluation order.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace cheapnvs::geometry
