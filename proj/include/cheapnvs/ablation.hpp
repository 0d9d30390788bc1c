#pragma once

#include <set>
#include <string>
#include <vector>

#include "cheapnvs/eval.hpp"
#include "cheapnvs/model.hpp"
#include "cheapnvs/training.hpp"

namespace cheapnvs::ablation {

struct SkipVariant {
  std::string label;
  std::set<model::DecoderKind> targets;
};

/// "No SC", "SC to all", "SC to f and phi" (mask and inpaint decoders).
std::vector<SkipVariant> skip_variants();

struct WiringReport {
  bool ok = true;
  std::vector<std::string> problems;
};

/// Checks each decoder against cfg.skip_targets two ways: block input widths
/// (latent or previous block, plus the matching encoder stage when skipped)
/// and whether the decoder output actually depends on the skip tensors.
WiringReport check_skip_wiring(model::CheapNvsNet& net);

struct AblationRow {
  SkipVariant variant;
  std::int64_t parameters = 0;
  WiringReport wiring;
  double final_loss = 0.0;
  eval::EvalReport report;
};

/// Trains one model per variant from the same seed and evaluates each on the
/// same frames and poses.
std::vector<AblationRow> run_skip_ablation(const std::vector<RGBDFrame>& frames, const model::ModelConfig& base,
                                           const training::TrainConfig& train, const eval::EvalOptions& eval);

std::string format_table(const std::vector<AblationRow>& rows);
void write_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows);

}  // namespace cheapnvs::ablation
