#include "cheapnvs/ablation.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "cheapnvs/errors.hpp"

namespace cheapnvs::ablation {

using model::DecoderKind;

std::vector<SkipVariant> skip_variants() {
  return {{"No SC", {}},
          {"SC to all", {DecoderKind::flow, DecoderKind::mask, DecoderKind::inpaint}},
          {"SC to f and phi", {DecoderKind::mask, DecoderKind::inpaint}}};
}

WiringReport check_skip_wiring(model::CheapNvsNet& net) {
  const auto& cfg = net->config();
  WiringReport report;
  auto fail = [&](const std::string& what) {
    report.ok = false;
    report.problems.push_back(what);
  };

  const int s = cfg.encoder_stages;
  const std::int64_t side = cfg.spatial_multiple();
  torch::NoGradGuard no_grad;
  model::Latent probe;
  probe.features = torch::randn({1, cfg.latent_channels(), 1, 1});
  for (int stage = 0; stage < s; ++stage) {
    const auto res = side >> (stage + 1);
    probe.skips.push_back(torch::randn({1, cfg.encoder_channels(stage), res, res}));
  }
  model::Latent shuffled = probe;
  for (auto& t : shuffled.skips) t = torch::randn_like(t);

  for (const auto kind : {DecoderKind::flow, DecoderKind::mask, DecoderKind::inpaint}) {
    const auto name = model::to_string(kind);
    const bool expected = cfg.skip_targets.count(kind) > 0;
    auto& dec = net->decoder(kind);
    if (dec.uses_skips() != expected) fail(name + ": skip flag " + (dec.uses_skips() ? "set" : "unset"));

    const auto widths = dec.block_input_channels();
    if (static_cast<int>(widths.size()) != s) {
      fail(name + ": expected " + std::to_string(s) + " blocks");
      continue;
    }
    std::int64_t prev = cfg.latent_channels();
    for (int j = 0; j < s; ++j) {
      const int stage = s - 1 - j;
      const std::int64_t want = prev + (expected ? cfg.encoder_channels(stage) : 0);
      if (widths[static_cast<std::size_t>(j)] != want) {
        fail(name + ": block " + std::to_string(j) + " takes " + std::to_string(widths[static_cast<std::size_t>(j)]) +
             " channels, expected " + std::to_string(want));
      }
      prev = cfg.encoder_channels(stage);
    }

    // Zero-initialised heads hide any dependence; probe with a random head.
    const auto saved_w = dec.head()->weight.clone();
    dec.head()->weight.normal_();
    const bool depends = !torch::equal(dec.forward(probe), dec.forward(shuffled));
    dec.head()->weight.copy_(saved_w);
    if (depends != expected) fail(name + (depends ? ": output depends on skips" : ": output ignores skips"));
  }
  return report;
}

std::vector<AblationRow> run_skip_ablation(const std::vector<RGBDFrame>& frames, const model::ModelConfig& base,
                                           const training::TrainConfig& train, const eval::EvalOptions& eval) {
  std::vector<AblationRow> rows;
  for (const auto& variant : skip_variants()) {
    auto cfg = base;
    cfg.skip_targets = variant.targets;
    model::ModelBundle bundle(cfg, train.seed);
    AblationRow row;
    row.variant = variant;
    row.parameters = bundle.net()->parameter_count();
    row.wiring = check_skip_wiring(bundle.net());
    auto run_cfg = train;
    run_cfg.checkpoint_path.clear();
    run_cfg.log_path.clear();
    const auto fit = training::fit(frames, bundle, run_cfg, eval.teacher);
    row.final_loss = fit.log.empty() ? 0.0 : fit.log.back().total;
    row.report = eval::evaluate(&bundle, frames, eval);
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string format_table(const std::vector<AblationRow>& rows) {
  std::ostringstream out;
  char line[256];
  out << "variant            skips                 params   wiring  final loss  warp PSNR  inpaint PSNR  IoU\n";
  for (const auto& r : rows) {
    std::snprintf(line, sizeof line, "%-17s  %-20s  %7lld  %-6s  %10.5f  %9.3f  %12.3f  %.4f\n",
                  r.variant.label.c_str(), model::format_skip_targets(r.variant.targets).c_str(),
                  static_cast<long long>(r.parameters), r.wiring.ok ? "ok" : "BROKEN", r.final_loss,
                  r.report.warping.psnr, r.report.inpainting.psnr, r.report.mask_iou);
    out << line;
  }
  return out.str();
}

void write_csv(const std::filesystem::path& path, const std::vector<AblationRow>& rows) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open ablation table for writing");
  out.precision(8);
  out << "variant,skips,parameters,wiring_ok,final_loss,warp_psnr,warp_ssim,inpaint_psnr,inpaint_ssim,mask_iou\n";
  for (const auto& r : rows) {
    out << '"' << r.variant.label << "\",\"" << model::format_skip_targets(r.variant.targets) << "\","
        << r.parameters << ',' << (r.wiring.ok ? 1 : 0) << ',' << r.final_loss << ',' << r.report.warping.psnr << ','
        << r.report.warping.ssim << ',' << r.report.inpainting.psnr << ',' << r.report.inpainting.ssim << ','
        << r.report.mask_iou << '\n';
  }
  if (!out) throw IoError(path.string(), "ablation table write failed");
}

}  // namespace cheapnvs::ablation
