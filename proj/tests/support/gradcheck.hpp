#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "cheapnvs/dataset.hpp"
#include "cheapnvs/model.hpp"
#include "cheapnvs/training.hpp"

namespace cheapnvs::testing {

struct GradCheckResult {
  int checked = 0;
  double max_rel_error = 0.0;
  double flow_head_grad = 0.0;  // |dL/d(flow head)|_1, must be non-zero for a meaningful check
};

/// Central differences against autograd on a float64 copy of an 8x8 model,
/// over `count` parameters drawn at random.
inline GradCheckResult finite_difference_check(std::uint64_t seed, int count = 10, double eps = 1e-6) {
  model::ModelConfig cfg;
  cfg.base_channels = 4;
  cfg.encoder_stages = 3;
  cfg.extrinsics_hidden = 8;
  cfg.extrinsics_out = 8;
  model::ModelBundle bundle(cfg, seed);
  auto& net = bundle.net();
  net->to(torch::kFloat64);
  {
    torch::NoGradGuard ng;
    torch::manual_seed(seed + 1);
    for (auto d : {model::DecoderKind::flow, model::DecoderKind::mask, model::DecoderKind::inpaint}) {
      net->decoder(d).head()->weight.normal_(0.0, 0.2);
      net->decoder(d).head()->bias.normal_(0.0, 0.2);
    }
  }

  training::TrainConfig tc;
  tc.seed = seed;
  tc.crop = 0;
  tc.hflip = false;
  const auto frame = dataset::synth_scene(dataset::SceneKind::step, 8, seed);
  std::vector<TrainingSample> samples{
      training::make_training_sample(frame, tc, 0, 0, training::classical_fill_teacher()),
      training::make_training_sample(frame, tc, 1, 0, training::classical_fill_teacher())};
  const auto batch = training::collate(samples).to(torch::kFloat64);
  const training::LossWeights all{1.0, 1.0, 1.0};

  auto loss = [&] {
    return training::loss_total(net->forward(batch.rgb, batch.depth, batch.pose), batch, all).total;
  };

  net->zero_grad();
  loss().backward();

  GradCheckResult res;
  for (const auto& p : net->decoder(model::DecoderKind::flow).head()->parameters()) {
    res.flow_head_grad += p.grad().abs().sum().item<double>();
  }

  auto params = net->parameters();
  std::vector<std::pair<std::size_t, std::int64_t>> all_slots;
  for (std::size_t i = 0; i < params.size(); ++i) {
    for (std::int64_t j = 0; j < params[i].numel(); ++j) all_slots.emplace_back(i, j);
  }
  std::mt19937_64 rng(seed + 2);
  std::shuffle(all_slots.begin(), all_slots.end(), rng);
  all_slots.resize(static_cast<std::size_t>(count));

  torch::NoGradGuard ng;
  for (const auto& [i, j] : all_slots) {
    auto flat = params[i].view({-1});
    const double analytic = params[i].grad().view({-1})[j].item<double>();
    const double orig = flat[j].item<double>();
    flat[j].fill_(orig + eps);
    const double up = loss().item<double>();
    flat[j].fill_(orig - eps);
    const double down = loss().item<double>();
    flat[j].fill_(orig);
    const double numeric = (up - down) / (2.0 * eps);
    const double scale = std::max({std::abs(analytic), std::abs(numeric), 1e-6});
    res.max_rel_error = std::max(res.max_rel_error, std::abs(analytic - numeric) / scale);
    ++res.checked;
  }
  return res;
}

}  // namespace cheapnvs::testing
