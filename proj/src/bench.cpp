#include "cheapnvs/bench.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <future>
#include <sstream>

#include "cheapnvs/compositor_tensor.hpp"
#include "cheapnvs/errors.hpp"
#include "cheapnvs/tensor_image.hpp"

namespace cheapnvs::bench {

Mode parse_mode(const std::string& name) {
  if (name == "sequential") return Mode::sequential;
  if (name == "parallel") return Mode::parallel;
  throw ValidationError("unknown bench mode '" + name + "' (expected sequential|parallel)");
}

std::string to_string(Mode mode) { return mode == Mode::sequential ? "sequential" : "parallel"; }

PipelineOutput run_pipeline(model::CheapNvsNet& net, const torch::Tensor& rgb, const torch::Tensor& depth,
                            const torch::Tensor& pose12, Mode mode) {
  const auto latent = net->encode(rgb, depth, pose12);
  PipelineOutput out;
  if (mode == Mode::sequential) {
    out.shift = net->decode_flow(latent);
    out.mask = torch::sigmoid(net->decode_mask_logits(latent));
    const auto warped = compositor::grid_sample(rgb, out.shift);
    out.inpaint = net->decode_inpaint(latent);
    out.synthesized = compositor::blend(warped, out.mask, out.inpaint);
  } else {
    const auto pred = net->decode_all(latent, true);
    out.shift = pred.shift;
    out.mask = pred.mask;
    out.inpaint = pred.inpaint;
    out.synthesized = compositor::synthesize(rgb, out.shift, out.mask, out.inpaint);
  }
  return out;
}

std::uint64_t output_hash(const PipelineOutput& out) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto* t : {&out.shift, &out.mask, &out.inpaint, &out.synthesized}) {
    const auto c = t->to(torch::kFloat32).contiguous();
    const auto* bytes = static_cast<const unsigned char*>(c.data_ptr());
    const auto n = static_cast<std::size_t>(c.numel()) * sizeof(float);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= bytes[i];
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

double max_abs_diff(const PipelineOutput& a, const PipelineOutput& b) {
  double worst = 0.0;
  const std::pair<const torch::Tensor*, const torch::Tensor*> pairs[] = {
      {&a.shift, &b.shift}, {&a.mask, &b.mask}, {&a.inpaint, &b.inpaint}, {&a.synthesized, &b.synthesized}};
  for (const auto& [x, y] : pairs) {
    if (!x->sizes().equals(y->sizes())) throw ShapeError("max_abs_diff: output shapes differ");
    worst = std::max(worst, (*x - *y).abs().max().item<double>());
  }
  return worst;
}

std::int64_t peak_rss_kb() {
  std::ifstream in("/proc/self/status");
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("VmHWM:", 0) == 0) return std::stoll(line.substr(6));
  }
  return 0;
}

bool reset_peak_rss() {
  std::ofstream out("/proc/self/clear_refs");
  if (!out) return false;
  out << "5";
  out.flush();
  return static_cast<bool>(out);
}

BenchReport measure_pipeline(model::ModelBundle& model, const RGBDFrame& frame, const geometry::Extrinsics& pose,
                             Mode mode, int runs, int warmup) {
  if (runs < 10) throw ValidationError("measure_pipeline: runs must be >= 10");
  if (warmup < 0) throw ValidationError("measure_pipeline: warmup must be >= 0");
  frame.validate();

  auto& net = model.net();
  net->eval();
  torch::NoGradGuard no_grad;
  const int multiple = model.config().spatial_multiple();
  const auto rgb = model::pad_to_multiple(to_tensor(frame.rgb), multiple);
  const auto depth = model::pad_to_multiple(to_tensor(frame.depth), multiple);
  const auto pose12 = pose_tensor(pose);

  BenchReport report;
  report.mode = mode;
  report.height = static_cast<int>(rgb.size(2));
  report.width = static_cast<int>(rgb.size(3));
  report.runs = runs;
  report.parameters = net->parameter_count();
  report.macs = net->multiply_accumulates(rgb.size(2), rgb.size(3));

  for (int i = 0; i < warmup; ++i) run_pipeline(net, rgb, depth, pose12, mode);

  reset_peak_rss();
  const auto rss_before = peak_rss_kb();
  net->reset_encoder_calls();
  std::vector<double> times;
  times.reserve(static_cast<std::size_t>(runs));
  for (int i = 0; i < runs; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    report.output = run_pipeline(net, rgb, depth, pose12, mode);
    const auto t1 = std::chrono::steady_clock::now();
    times.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  report.encoder_calls_per_frame = static_cast<double>(net->encoder_calls()) / runs;
  report.peak_rss_delta_mb = static_cast<double>(std::max<std::int64_t>(0, peak_rss_kb() - rss_before)) / 1024.0;

  std::sort(times.begin(), times.end());
  const auto n = times.size();
  report.median_ms = n % 2 ? times[n / 2] : 0.5 * (times[n / 2 - 1] + times[n / 2]);
  const auto p95 = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(n))) - 1;
  report.p95_ms = times[std::min(p95, n - 1)];
  report.hash = output_hash(report.output);
  return report;
}

void write_report_csv(const std::filesystem::path& path, const std::vector<BenchReport>& reports) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open report for writing");
  out << "mode,height,width,runs,median_ms,p95_ms,peak_rss_delta_mb,encoder_calls_per_frame,parameters,macs,"
         "output_hash,reference_gpu_ms,reference_memory_gb\n";
  for (const auto& r : reports) {
    char hash[17];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(r.hash));
    out << to_string(r.mode) << ',' << r.height << ',' << r.width << ',' << r.runs << ',' << r.median_ms << ','
        << r.p95_ms << ',' << r.peak_rss_delta_mb << ',' << r.encoder_calls_per_frame << ',' << r.parameters << ','
        << r.macs << ',' << hash << ',' << kReferenceGpuMs << ',' << kReferenceMemoryGb << '\n';
  }
  if (!out) throw IoError(path.string(), "report write failed");
}

std::string format_table(const std::vector<BenchReport>& reports) {
  std::ostringstream out;
  char line[256];
  out << "mode        size        median ms   p95 ms   peak dRSS MB  enc/frame  params     GMACs   hash\n";
  for (const auto& r : reports) {
    std::snprintf(line, sizeof line, "%-10s  %4dx%-5d  %9.2f  %8.2f  %11.1f  %9.2f  %9lld  %6.3f  %016llx\n",
                  to_string(r.mode).c_str(), r.height, r.width, r.median_ms, r.p95_ms, r.peak_rss_delta_mb,
                  r.encoder_calls_per_frame, static_cast<long long>(r.parameters), static_cast<double>(r.macs) / 1e9,
                  static_cast<unsigned long long>(r.hash));
    out << line;
  }
  std::snprintf(line, sizeof line, "reference (context only, not compared): %.0f ms GPU, %.0f ms mobile, %.2f GB\n",
                kReferenceGpuMs, kReferenceMobileMs, kReferenceMemoryGb);
  out << line;
  return out.str();
}

}  // namespace cheapnvs::bench
