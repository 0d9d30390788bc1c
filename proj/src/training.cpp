#include "cheapnvs/training.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "cheapnvs/errors.hpp"
#include "cheapnvs/tensor_image.hpp"

namespace cheapnvs::training {

namespace F = torch::nn::functional;

LossWeights lambda_schedule(int epoch, const LossSchedule& schedule) {
  if (epoch < 0) throw ValidationError("lambda_schedule: epoch must be >= 0");
  if (epoch < schedule.activation_epoch) return {0.0, 1.0, 1.0};
  return {1.0, 1.0, 1.0};
}

TrainingBatch TrainingBatch::to(torch::Dtype dtype) const {
  return {rgb.to(dtype),     depth.to(dtype),      pose.to(dtype),     shift_gt.to(dtype),
          mask_gt.to(dtype), inpaint_gt.to(dtype), target_gt.to(dtype)};
}

TrainingBatch collate(const std::vector<TrainingSample>& samples) {
  if (samples.empty()) throw ValidationError("collate: empty batch");
  std::vector<torch::Tensor> rgb, depth, pose, shift, mask, inpaint, target;
  for (const auto& s : samples) {
    rgb.push_back(to_tensor(s.frame.rgb));
    depth.push_back(to_tensor(s.frame.depth));
    pose.push_back(pose_tensor(s.pose));
    shift.push_back(to_tensor(s.labels.shift));
    mask.push_back(to_tensor(s.labels.mask));
    inpaint.push_back(to_tensor(s.inpaint_gt));
    target.push_back(to_tensor(s.target_gt));
  }
  return {torch::cat(rgb),  torch::cat(depth),   torch::cat(pose),  torch::cat(shift),
          torch::cat(mask), torch::cat(inpaint), torch::cat(target)};
}

namespace {

torch::Tensor gaussian_kernel(int size, double sigma, const torch::TensorOptions& opts) {
  auto x = torch::arange(size, opts) - static_cast<double>(size / 2);
  auto g = torch::exp(-(x * x) / (2.0 * sigma * sigma));
  g = g / g.sum();
  return torch::outer(g, g);
}

}  // namespace

torch::Tensor ssim_tensor(const torch::Tensor& a, const torch::Tensor& b) {
  const auto ch = a.size(1);
  auto k = gaussian_kernel(11, 1.5, a.options()).view({1, 1, 11, 11}).expand({ch, 1, 11, 11}).contiguous();
  auto conv = [&](const torch::Tensor& x) { return F::conv2d(x, k, F::Conv2dFuncOptions().groups(ch)); };
  const auto mu_a = conv(a);
  const auto mu_b = conv(b);
  const auto var_a = conv(a * a) - mu_a * mu_a;
  const auto var_b = conv(b * b) - mu_b * mu_b;
  const auto cov = conv(a * b) - mu_a * mu_b;
  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  const auto map = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                   ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
  return map.mean();
}

torch::Tensor focal_frequency_loss(const torch::Tensor& pred, const torch::Tensor& target) {
  const auto diff = torch::fft::fft2(pred, c10::nullopt, {-2, -1}, "ortho") -
                    torch::fft::fft2(target, c10::nullopt, {-2, -1}, "ortho");
  const auto dist = torch::real(diff * torch::conj(diff));
  auto weight = torch::sqrt(dist).detach();
  const auto peak = std::get<0>(weight.flatten(2).max(2)).view({weight.size(0), weight.size(1), 1, 1});
  weight = torch::nan_to_num(weight / peak.clamp_min(1e-12)).clamp(0.0, 1.0);
  return (weight * dist).mean();
}

LossReport loss_total(const model::Prediction& pred, const TrainingBatch& gt, const LossWeights& lambda,
                      const InpaintLossOptions& options) {
  if (!pred.shift.sizes().equals(gt.shift_gt.sizes()) || !pred.mask_logits.sizes().equals(gt.mask_gt.sizes()) ||
      !pred.inpaint.sizes().equals(gt.inpaint_gt.sizes())) {
    throw ShapeError("loss_total: prediction and ground-truth shapes differ");
  }
  const auto visible = gt.mask_gt;
  const auto holes = 1.0 - visible;

  const auto flow_count = (visible.sum() * 2.0).clamp_min(1.0);
  const auto l_flow = ((pred.shift - gt.shift_gt).abs() * visible).sum() / flow_count;

  const auto l_mask = F::binary_cross_entropy_with_logits(pred.mask_logits, gt.mask_gt);

  const auto region = options.full_image ? torch::ones_like(holes) : holes;
  const auto inpaint_count = (region.sum() * 3.0).clamp_min(1.0);
  auto l_inpaint = ((pred.inpaint - gt.inpaint_gt).abs() * region).sum() / inpaint_count;
  if (options.ssim_weight != 0.0) {
    l_inpaint = l_inpaint + options.ssim_weight * (1.0 - ssim_tensor(pred.inpaint, gt.inpaint_gt));
  }
  if (options.ffl_weight != 0.0) {
    l_inpaint = l_inpaint + options.ffl_weight * focal_frequency_loss(pred.inpaint, gt.inpaint_gt);
  }
  if (options.perceptual_weight != 0.0) {
    if (!options.perceptual_features) throw ValidationError("perceptual loss enabled without a feature extractor");
    l_inpaint = l_inpaint + options.perceptual_weight * (options.perceptual_features(pred.inpaint) -
                                                         options.perceptual_features(gt.inpaint_gt))
                                                            .abs()
                                                            .mean();
  }

  torch::Tensor total = torch::zeros({}, pred.shift.options());
  if (lambda.inpaint != 0.0) total = total + lambda.inpaint * l_inpaint;
  if (lambda.mask != 0.0) total = total + lambda.mask * l_mask;
  if (lambda.flow != 0.0) total = total + lambda.flow * l_flow;

  LossReport report;
  report.total = total;
  report.total_value = total.item<double>();
  report.flow = l_flow.item<double>();
  report.mask = l_mask.item<double>();
  report.inpaint = l_inpaint.item<double>();
  return report;
}

TrainingDiverged::TrainingDiverged(const StepReport& snapshot, std::int64_t step)
    : std::runtime_error([&] {
        std::ostringstream msg;
        msg << "non-finite loss at step " << step << " (total=" << snapshot.total << " flow=" << snapshot.flow
            << " mask=" << snapshot.mask << " inpaint=" << snapshot.inpaint << ")";
        return msg.str();
      }()),
      snapshot_(snapshot),
      step_(step) {}

StepReport train_step(const TrainingBatch& batch, model::CheapNvsNet& net, torch::optim::Optimizer& optimizer,
                      const LossWeights& lambda, const InpaintLossOptions& options, std::int64_t step) {
  net->train();
  optimizer.zero_grad();
  const auto pred = net->forward(batch.rgb, batch.depth, batch.pose);
  const auto loss = loss_total(pred, batch, lambda, options);
  const StepReport report{loss.total_value, loss.flow, loss.mask, loss.inpaint};
  if (!std::isfinite(report.total)) throw TrainingDiverged(report, step);
  if (loss.total.requires_grad()) {
    loss.total.backward();
    optimizer.step();
  }
  return report;
}

void TrainConfig::validate(const model::ModelConfig& model) const {
  if (epochs < 0) throw ValidationError("train: epochs must be >= 0");
  if (!(lr > 0.0)) throw ValidationError("train: lr must be > 0");
  if (batch_size < 1) throw ValidationError("train: batch_size must be >= 1");
  if (crop > 0 && crop % model.spatial_multiple() != 0) {
    throw ValidationError("train: crop must be divisible by " + std::to_string(model.spatial_multiple()));
  }
  if (schedule.activation_epoch < 0) throw ValidationError("train: activation_epoch must be >= 0");
  poses.validate();
}

TrainingSample make_training_sample(const RGBDFrame& frame, const TrainConfig& cfg, int epoch, std::size_t index,
                                    const InpaintTeacher& teacher) {
  const auto key = geometry::derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1, index);
  std::mt19937_64 rng(key);

  RGBDFrame view = frame;
  if (cfg.crop > 0) {
    if (cfg.crop > frame.height() || cfg.crop > frame.width()) {
      throw ValidationError("train: crop " + std::to_string(cfg.crop) + " exceeds frame size " +
                            std::to_string(frame.height()) + "x" + std::to_string(frame.width()));
    }
    std::uniform_int_distribution<int> oy(0, frame.height() - cfg.crop);
    std::uniform_int_distribution<int> ox(0, frame.width() - cfg.crop);
    const int y0 = oy(rng);
    const int x0 = ox(rng);
    view.rgb = crop(frame.rgb, y0, x0, cfg.crop, cfg.crop);
    view.depth = crop(frame.depth, y0, x0, cfg.crop, cfg.crop);
  }
  if (cfg.hflip && std::bernoulli_distribution(0.5)(rng)) {
    view.rgb = flip_horizontal(view.rgb);
    view.depth = flip_horizontal(view.depth);
  }

  geometry::PoseSamplerConfig pose_cfg = cfg.poses;
  pose_cfg.seed = rng();
  const auto pose = geometry::sample_pose(pose_cfg, view.median_depth());
  const auto k = geometry::Intrinsics::centered(view.width(), view.height());
  return warp::assemble_sample(view, pose, warp::run_forward_warp(cfg.warp_backend, view, pose, k), teacher);
}

void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open log for writing");
  out << "epoch,L_flow,L_mask,L_inpaint,lambda1,lambda2,lambda3\n";
  out.precision(9);
  for (const auto& e : log) {
    out << e.epoch << ',' << e.flow << ',' << e.mask << ',' << e.inpaint << ',' << e.lambda.inpaint << ','
        << e.lambda.mask << ',' << e.lambda.flow << '\n';
  }
  if (!out) throw IoError(path.string(), "log write failed");
}

FitResult fit(const std::vector<RGBDFrame>& dataset, model::ModelBundle& model, const TrainConfig& cfg,
              const InpaintTeacher& teacher, const EpochCallback& on_epoch) {
  if (dataset.empty()) throw ValidationError("fit: dataset is empty");
  cfg.validate(model.config());

  auto& net = model.net();
  torch::optim::Adam optimizer(net->parameters(), torch::optim::AdamOptions(cfg.lr));
  FitResult result;

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto lambda = lambda_schedule(epoch, cfg.schedule);
    std::vector<std::size_t> order(dataset.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 shuffle_rng(geometry::derive_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1, ~0ULL));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    EpochLog entry;
    entry.epoch = epoch;
    entry.lambda = lambda;
    double weight_sum = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t end = std::min(order.size(), begin + static_cast<std::size_t>(cfg.batch_size));
      std::vector<TrainingSample> samples;
      for (std::size_t i = begin; i < end; ++i) {
        samples.push_back(make_training_sample(dataset[order[i]], cfg, epoch, order[i], teacher));
      }
      const auto step = train_step(collate(samples), net, optimizer, lambda, cfg.loss, result.steps++);
      const double wgt = static_cast<double>(end - begin);
      entry.flow += wgt * step.flow;
      entry.mask += wgt * step.mask;
      entry.inpaint += wgt * step.inpaint;
      entry.total += wgt * step.total;
      weight_sum += wgt;
    }
    entry.flow /= weight_sum;
    entry.mask /= weight_sum;
    entry.inpaint /= weight_sum;
    entry.total /= weight_sum;
    result.log.push_back(entry);
    if (!cfg.log_path.empty()) write_log_csv(cfg.log_path, result.log);
    if (on_epoch) on_epoch(entry);
  }

  if (!cfg.log_path.empty() && result.log.empty()) write_log_csv(cfg.log_path, result.log);
  if (!cfg.checkpoint_path.empty()) model.save(cfg.checkpoint_path);
  return result;
}

}  // namespace cheapnvs::training
