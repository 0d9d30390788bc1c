#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <vector>

#include <torch/torch.h>

#include "cheapnvs/model.hpp"
#include "cheapnvs/teacher.hpp"
#include "cheapnvs/warp_backend.hpp"

namespace cheapnvs::training {

struct LossSchedule {
  int activation_epoch = 5;
};

struct LossWeights {
  double inpaint = 0.0;  // lambda1
  double mask = 1.0;     // lambda2
  double flow = 1.0;     // lambda3
};

/// (0, 1, 1) before the activation epoch, (1, 1, 1) from it on.
LossWeights lambda_schedule(int epoch, const LossSchedule& schedule);

/// Extra inpainting terms for loss ablations. All default off.
struct InpaintLossOptions {
  bool full_image = false;  // L1 over the whole image instead of holes only
  double ssim_weight = 0.0;
  double ffl_weight = 0.0;  // focal frequency loss
  double perceptual_weight = 0.0;
  /// Feature extractor for the perceptual term (B x 3 x H x W -> any).
  std::function<torch::Tensor(const torch::Tensor&)> perceptual_features;
};

struct TrainingBatch {
  torch::Tensor rgb;         // B x 3 x H x W
  torch::Tensor depth;       // B x 1 x H x W
  torch::Tensor pose;        // B x 12
  torch::Tensor shift_gt;    // B x 2 x H x W
  torch::Tensor mask_gt;     // B x 1 x H x W, {0, 1}
  torch::Tensor inpaint_gt;  // B x 3 x H x W
  torch::Tensor target_gt;   // B x 3 x H x W

  std::int64_t size() const { return rgb.defined() ? rgb.size(0) : 0; }
  TrainingBatch to(torch::Dtype dtype) const;
};

TrainingBatch collate(const std::vector<TrainingSample>& samples);

struct LossReport {
  torch::Tensor total;  // differentiable
  double total_value = 0.0;
  double flow = 0.0;
  double mask = 0.0;
  double inpaint = 0.0;
};

/// L_flow    mean |shift - shift_gt| over visible pixels (both channels)
/// L_mask    mean binary cross-entropy on the mask logits
/// L_inpaint mean |inpaint - inpaint_gt| over hole pixels (or the full image)
/// total     lambda1 L_inpaint + lambda2 L_mask + lambda3 L_flow
/// Terms whose weight is zero are left out of the graph.
LossReport loss_total(const model::Prediction& pred, const TrainingBatch& gt, const LossWeights& lambda,
                      const InpaintLossOptions& options = {});

/// Differentiable mean SSIM (11x11 Gaussian window, per channel).
torch::Tensor ssim_tensor(const torch::Tensor& a, const torch::Tensor& b);

/// Focal frequency loss with alpha = 1.
torch::Tensor focal_frequency_loss(const torch::Tensor& pred, const torch::Tensor& target);

struct StepReport {
  double total = 0.0;
  double flow = 0.0;
  double mask = 0.0;
  double inpaint = 0.0;
};

/// Thrown when a step produces a non-finite loss. Carries the loss snapshot.
class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(const StepReport& snapshot, std::int64_t step);
  const StepReport& snapshot() const noexcept { return snapshot_; }
  std::int64_t step() const noexcept { return step_; }

 private:
  StepReport snapshot_;
  std::int64_t step_;
};

/// One Adam step on L_total.
StepReport train_step(const TrainingBatch& batch, model::CheapNvsNet& net, torch::optim::Optimizer& optimizer,
                      const LossWeights& lambda, const InpaintLossOptions& options = {}, std::int64_t step = 0);

struct TrainConfig {
  int epochs = 20;
  double lr = 1e-4;
  int batch_size = 32;
  int crop = 224;  // <= 0 trains on full frames
  bool hflip = true;
  std::uint64_t seed = 0;
  warp::Backend warp_backend = warp::Backend::reference;
  LossSchedule schedule;
  geometry::PoseSamplerConfig poses;  // seed field unused; streams derive from `seed`
  InpaintLossOptions loss;
  std::filesystem::path checkpoint_path;  // empty: do not write
  std::filesystem::path log_path;         // empty: do not write

  void validate(const model::ModelConfig& model) const;
};

/// Augmented frame plus labels for sample `index` in `epoch`. Randomness
/// (crop, flip, pose) is keyed by (seed, epoch, index) only.
TrainingSample make_training_sample(const RGBDFrame& frame, const TrainConfig& cfg, int epoch, std::size_t index,
                                    const InpaintTeacher& teacher);

struct EpochLog {
  int epoch = 0;
  double flow = 0.0;
  double mask = 0.0;
  double inpaint = 0.0;
  double total = 0.0;
  LossWeights lambda;
};

struct FitResult {
  std::vector<EpochLog> log;
  std::int64_t steps = 0;
};

/// CSV columns: epoch,L_flow,L_mask,L_inpaint,lambda1,lambda2,lambda3
void write_log_csv(const std::filesystem::path& path, const std::vector<EpochLog>& log);

using EpochCallback = std::function<void(const EpochLog&)>;

/// Multi-stage training with on-the-fly labels. Writes the checkpoint and the
/// CSV log when the corresponding paths are set.
FitResult fit(const std::vector<RGBDFrame>& dataset, model::ModelBundle& model, const TrainConfig& cfg,
              const InpaintTeacher& teacher = classical_fill_teacher(), const EpochCallback& on_epoch = {});

}  // namespace cheapnvs::training
