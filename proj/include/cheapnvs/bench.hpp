#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <torch/torch.h>

#include "cheapnvs/model.hpp"

namespace cheapnvs::bench {

enum class Mode { sequential, parallel };

Mode parse_mode(const std::string& name);
std::string to_string(Mode mode);

/// Reference figures for context only. Never compared against.
inline constexpr double kReferenceGpuMs = 26.0;
inline constexpr double kReferenceMobileMs = 33.0;
inline constexpr double kReferenceMemoryGb = 0.14;

struct PipelineOutput {
  torch::Tensor shift;
  torch::Tensor mask;
  torch::Tensor inpaint;
  torch::Tensor synthesized;
};

/// Sequential: flow and mask decoders, then the warped image, then the
/// inpainting decoder. Parallel: the three decoders concurrently on the
/// shared latent. Inputs are B x C x H x W with H, W multiples of the model's
/// spatial multiple.
PipelineOutput run_pipeline(model::CheapNvsNet& net, const torch::Tensor& rgb, const torch::Tensor& depth,
                            const torch::Tensor& pose12, Mode mode);

/// FNV-1a over the float bytes of all four outputs.
std::uint64_t output_hash(const PipelineOutput& out);

/// Largest absolute element difference over all four outputs.
double max_abs_diff(const PipelineOutput& a, const PipelineOutput& b);

struct BenchReport {
  Mode mode = Mode::sequential;
  int height = 0;
  int width = 0;  // padded size actually run
  int runs = 0;
  double median_ms = 0.0;
  double p95_ms = 0.0;
  double peak_rss_delta_mb = 0.0;
  double encoder_calls_per_frame = 0.0;
  std::int64_t parameters = 0;
  std::int64_t macs = 0;
  std::uint64_t hash = 0;
  PipelineOutput output;
};

/// Times `runs` (>= 10) forward passes after `warmup` untimed ones.
BenchReport measure_pipeline(model::ModelBundle& model, const RGBDFrame& frame, const geometry::Extrinsics& pose,
                             Mode mode, int runs = 10, int warmup = 2);

/// Peak resident set size in kB (VmHWM), 0 if unavailable.
std::int64_t peak_rss_kb();
/// Resets the peak RSS watermark where the kernel allows it.
bool reset_peak_rss();

void write_report_csv(const std::filesystem::path& path, const std::vector<BenchReport>& reports);
std::string format_table(const std::vector<BenchReport>& reports);

}  // namespace cheapnvs::bench
