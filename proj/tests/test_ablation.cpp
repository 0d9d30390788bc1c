#include "torch_doctest.hpp"

#include <fstream>

#include "cheapnvs/ablation.hpp"
#include "cheapnvs/dataset.hpp"
#include "temp_dir.hpp"

using namespace cheapnvs;
using model::DecoderKind;

namespace {

model::ModelConfig small_model() {
  model::ModelConfig cfg;
  cfg.base_channels = 4;
  cfg.encoder_stages = 3;
  cfg.extrinsics_hidden = 8;
  cfg.extrinsics_out = 16;
  return cfg;
}

}  // namespace

TEST_CASE("the three skip variants") {
  const auto v = ablation::skip_variants();
  REQUIRE(v.size() == 3);
  CHECK(v[0].label == "No SC");
  CHECK(v[0].targets.empty());
  CHECK(v[1].targets.size() == 3);
  CHECK(model::format_skip_targets(v[2].targets) == "mask,inpaint");
  CHECK(model::format_skip_targets(v[2].targets) == model::format_skip_targets(model::ModelConfig{}.skip_targets));
}

TEST_CASE("introspection confirms each variant's wiring") {
  for (const auto& variant : ablation::skip_variants()) {
    CAPTURE(variant.label);
    auto cfg = small_model();
    cfg.skip_targets = variant.targets;
    model::ModelBundle bundle(cfg, 1);
    const auto report = ablation::check_skip_wiring(bundle.net());
    CHECK(report.ok);
    CHECK(report.problems.empty());
    // the check restores the zero flow head
    CHECK(bundle.net()->decoder(DecoderKind::flow).head()->weight.abs().max().item<double>() == 0.0);
  }
}

TEST_CASE("introspection catches a decoder that ignores its skips") {
  model::ModelBundle bundle(small_model(), 2);
  auto& net = bundle.net();
  auto& mask = net->decoder(DecoderKind::mask);
  {
    torch::NoGradGuard ng;
    // cut the skip input channels of every block
    std::int64_t prev = net->config().latent_channels();
    const int s = net->config().encoder_stages;
    for (int j = 0; j < s; ++j) {
      auto w = mask.named_parameters(true).find("block" + std::to_string(j) + ".weight");
      REQUIRE(w != nullptr);
      w->slice(1, prev).zero_();
      prev = net->config().encoder_channels(s - 1 - j);
    }
  }
  const auto report = ablation::check_skip_wiring(net);
  CHECK_FALSE(report.ok);
  REQUIRE(report.problems.size() == 1);
  CHECK(report.problems[0].find("mask") != std::string::npos);
}

TEST_CASE("ablation harness emits one row per variant") {
  const std::vector<RGBDFrame> frames{dataset::synth_scene(dataset::SceneKind::step, 16, 1),
                                      dataset::synth_scene(dataset::SceneKind::plane, 16, 2)};
  training::TrainConfig tc;
  tc.epochs = 2;
  tc.batch_size = 2;
  tc.crop = 0;
  tc.lr = 1e-3;
  tc.seed = 3;
  eval::EvalOptions eo;
  eo.seed = 4;
  const auto rows = ablation::run_skip_ablation(frames, small_model(), tc, eo);
  REQUIRE(rows.size() == 3);
  for (const auto& r : rows) {
    CHECK(r.wiring.ok);
    CHECK(std::isfinite(r.final_loss));
    CHECK(r.report.samples.size() == 2);
  }
  CHECK(rows[0].parameters < rows[2].parameters);
  CHECK(rows[2].parameters < rows[1].parameters);
  const auto table = ablation::format_table(rows);
  for (const auto& v : ablation::skip_variants()) CHECK(table.find(v.label) != std::string::npos);

  testing::TempDir dir;
  ablation::write_csv(dir / "ablation.csv", rows);
  std::ifstream in(dir / "ablation.csv");
  int lines = 0;
  for (std::string l; std::getline(in, l);) ++lines;
  CHECK(lines == 4);
}
