#include "cheapnvs/eval.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cheapnvs/compositor.hpp"
#include "cheapnvs/errors.hpp"
#include "cheapnvs/metrics.hpp"

namespace cheapnvs::eval {

namespace {

Image binarize(const Image& mask) {
  Image out = mask;
  for (auto& v : out.data) v = v > 0.5F ? 1.0F : 0.0F;
  return out;
}

Image apply_mask(const Image& image, const Image& mask) {
  Image out = image;
  const auto ch = static_cast<std::size_t>(image.channels);
  for (std::size_t p = 0; p < image.pixels(); ++p) {
    for (std::size_t c = 0; c < ch; ++c) out.data[p * ch + c] *= mask.data[p];
  }
  return out;
}

Image mask_union(const Image& a, const Image& b) {
  Image out = a;
  for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] = std::max(a.data[i], b.data[i]);
  return out;
}

}  // namespace

geometry::Extrinsics eval_pose(const EvalOptions& options, const RGBDFrame& frame, std::size_t index) {
  if (index < options.frozen_poses.size() && options.frozen_poses[index]) return *options.frozen_poses[index];
  geometry::PoseSamplerConfig cfg = options.poses;
  cfg.seed = geometry::derive_seed(options.seed, 0, index);
  return geometry::sample_pose(cfg, frame.median_depth());
}

std::vector<TrainingSample> make_eval_set(const std::vector<RGBDFrame>& frames, const EvalOptions& options) {
  std::vector<TrainingSample> out;
  out.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const auto& frame = frames[i];
    const auto k = geometry::Intrinsics::centered(frame.width(), frame.height());
    out.push_back(warp::make_labels(frame, eval_pose(options, frame, i), k, options.teacher));
  }
  return out;
}

model::ViewPrediction oracle_prediction(const TrainingSample& gt) {
  model::ViewPrediction p;
  p.shift = gt.labels.shift;
  p.mask = gt.labels.mask;
  p.inpaint = gt.inpaint_gt;
  p.warped = warp::grid_sample(gt.frame.rgb, gt.labels.shift);
  p.synthesized = compositor::synthesize(gt.frame.rgb, gt.labels.shift, gt.labels.mask, gt.inpaint_gt);
  return p;
}

SampleMetrics score(const TrainingSample& gt, const model::ViewPrediction& pred, const PerceptualMetric& lpips) {
  const Image pred_mask = binarize(pred.mask);
  const Image gt_mask = binarize(gt.labels.mask);
  const Image pred_warp = apply_mask(pred.warped, pred_mask);
  const Image gt_warp = apply_mask(gt.labels.warped_rgb, gt_mask);

  SampleMetrics m;
  m.warping.psnr = masked_psnr(pred_warp, gt_warp, mask_union(pred_mask, gt_mask));
  m.warping.ssim = ssim(pred_warp, gt_warp);
  m.inpainting.psnr = psnr(pred.synthesized, gt.target_gt);
  m.inpainting.ssim = ssim(pred.synthesized, gt.target_gt);
  if (lpips) {
    m.warping.lpips = lpips(pred_warp, gt_warp);
    m.inpainting.lpips = lpips(pred.synthesized, gt.target_gt);
  }
  m.mask_iou = mask_iou(pred_mask, gt_mask);
  return m;
}

EvalReport evaluate(model::ModelBundle* model, const std::vector<RGBDFrame>& frames, const EvalOptions& options) {
  if (frames.empty()) throw ValidationError("evaluate: no frames");
  const auto set = make_eval_set(frames, options);

  EvalReport report;
  const bool with_lpips = static_cast<bool>(options.lpips);
  if (with_lpips) {
    report.warping.lpips = 0.0;
    report.inpainting.lpips = 0.0;
  }
  for (std::size_t i = 0; i < set.size(); ++i) {
    const auto pred = model ? model->predict(set[i].frame, set[i].pose) : oracle_prediction(set[i]);
    auto m = score(set[i], pred, options.lpips);
    m.name = i < options.names.size() ? options.names[i] : std::to_string(i);
    report.warping.psnr += m.warping.psnr;
    report.warping.ssim += m.warping.ssim;
    report.inpainting.psnr += m.inpainting.psnr;
    report.inpainting.ssim += m.inpainting.ssim;
    if (with_lpips) {
      *report.warping.lpips += *m.warping.lpips;
      *report.inpainting.lpips += *m.inpainting.lpips;
    }
    report.mask_iou += m.mask_iou;
    report.samples.push_back(std::move(m));
  }
  const double n = static_cast<double>(set.size());
  for (auto* col : {&report.warping, &report.inpainting}) {
    col->psnr /= n;
    col->ssim /= n;
    if (col->lpips) *col->lpips /= n;
  }
  report.mask_iou /= n;
  return report;
}

namespace {

std::string opt(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream s;
  s.precision(6);
  s << *v;
  return s.str();
}

void csv_row(std::ostream& out, const std::string& name, const ColumnMetrics& w, const ColumnMetrics& i, double iou) {
  out << name << ',' << opt(w.lpips) << ',' << w.psnr << ',' << w.ssim << ',' << opt(i.lpips) << ',' << i.psnr
      << ',' << i.ssim << ',' << iou << '\n';
}

}  // namespace

void write_report_csv(const std::filesystem::path& path, const EvalReport& report) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open report for writing");
  out.precision(8);
  out << "sample,warp_lpips,warp_psnr,warp_ssim,inpaint_lpips,inpaint_psnr,inpaint_ssim,mask_iou\n";
  for (const auto& s : report.samples) csv_row(out, s.name, s.warping, s.inpainting, s.mask_iou);
  csv_row(out, "mean", report.warping, report.inpainting, report.mask_iou);
  if (!out) throw IoError(path.string(), "report write failed");
}

std::string format_table(const EvalReport& report) {
  auto cell = [](const std::optional<double>& v) {
    char buf[32];
    if (!v) return std::string("      -");
    std::snprintf(buf, sizeof buf, "%7.3f", *v);
    return std::string(buf);
  };
  char line[256];
  std::ostringstream out;
  out << "            Warping                   | Inpainting\n";
  out << "            LPIPS    PSNR     SSIM    | LPIPS    PSNR     SSIM\n";
  std::snprintf(line, sizeof line, "mean       %s %8.3f %8.4f  |%s %8.3f %8.4f\n", cell(report.warping.lpips).c_str(),
                report.warping.psnr, report.warping.ssim, cell(report.inpainting.lpips).c_str(),
                report.inpainting.psnr, report.inpainting.ssim);
  out << line;
  std::snprintf(line, sizeof line, "mask IoU %.4f over %zu samples\n", report.mask_iou, report.samples.size());
  out << line;
  return out.str();
}

}  // namespace cheapnvs::eval
