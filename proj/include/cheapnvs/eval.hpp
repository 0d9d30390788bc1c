#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cheapnvs/model.hpp"
#include "cheapnvs/teacher.hpp"
#include "cheapnvs/warp_oracle.hpp"

namespace cheapnvs::eval {

/// External perceptual distance (e.g. LPIPS). Lower is better.
using PerceptualMetric = std::function<double(const Image& a, const Image& b)>;

struct ColumnMetrics {
  std::optional<double> lpips;  // absent without a perceptual plug-in
  double psnr = 0.0;
  double ssim = 0.0;
};

struct SampleMetrics {
  std::string name;
  ColumnMetrics warping;
  ColumnMetrics inpainting;
  double mask_iou = 0.0;
};

struct EvalReport {
  ColumnMetrics warping;
  ColumnMetrics inpainting;
  double mask_iou = 0.0;
  std::vector<SampleMetrics> samples;
};

struct EvalOptions {
  std::uint64_t seed = 0;
  geometry::PoseSamplerConfig poses;
  /// Per-frame fixed poses; missing or empty entries are sampled from `seed`.
  std::vector<std::optional<geometry::Extrinsics>> frozen_poses;
  std::vector<std::string> names;
  training::InpaintTeacher teacher = training::classical_fill_teacher();
  PerceptualMetric lpips;
};

/// Eval pose of frame `index`: the frozen pose if given, otherwise a draw
/// keyed by (seed, index).
geometry::Extrinsics eval_pose(const EvalOptions& options, const RGBDFrame& frame, std::size_t index);

/// Ground truth for every frame under its eval pose.
std::vector<TrainingSample> make_eval_set(const std::vector<RGBDFrame>& frames, const EvalOptions& options);

/// Scores one prediction against its ground truth.
///
/// Warping: grid_sample(rgb, shift) * [mask > 0.5] against warped_rgb * mask_gt.
/// PSNR is taken over the union of both masks, SSIM over the masked images.
/// Inpainting: the blended view against the composed target.
SampleMetrics score(const TrainingSample& gt, const model::ViewPrediction& pred, const PerceptualMetric& lpips = {});

/// Ground-truth components dressed up as a prediction.
model::ViewPrediction oracle_prediction(const TrainingSample& gt);

/// Means over the eval set. A null model scores the oracle labels themselves.
EvalReport evaluate(model::ModelBundle* model, const std::vector<RGBDFrame>& frames, const EvalOptions& options);

/// One row per sample plus a final "mean" row.
void write_report_csv(const std::filesystem::path& path, const EvalReport& report);

/// Warping | Inpainting table with LPIPS, PSNR and SSIM under each.
std::string format_table(const EvalReport& report);

}  // namespace cheapnvs::eval
