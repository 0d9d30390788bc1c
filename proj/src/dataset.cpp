#include "cheapnvs/dataset.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <numbers>
#include <random>

#include "cheapnvs/errors.hpp"
#include "cheapnvs/io.hpp"

namespace cheapnvs::dataset {

namespace {

bool is_image_ext(const fs::path& p) {
  auto ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

void sanitize_depth(Image& depth, const std::string& where) {
  std::vector<float> positive;
  positive.reserve(depth.data.size());
  for (float d : depth.data) {
    if (d > 0.0f && std::isfinite(d)) positive.push_back(d);
  }
  if (positive.empty()) throw ValidationError(where + ": depth map has no positive values");
  if (positive.size() == depth.data.size()) return;
  const auto rank = static_cast<std::size_t>(0.01 * static_cast<double>(positive.size() - 1));
  std::nth_element(positive.begin(), positive.begin() + static_cast<std::ptrdiff_t>(rank), positive.end());
  const float fill = positive[rank];
  for (float& d : depth.data) {
    if (!(d > 0.0f) || !std::isfinite(d)) d = fill;
  }
}

}  // namespace

fs::path scale_sidecar(const fs::path& depth_png) {
  fs::path p = depth_png;
  p.replace_extension(".scale");
  return p;
}

RGBDFrame load_sample(const SampleRecord& record) {
  RGBDFrame frame;
  frame.rgb = io::read_rgb(record.image);
  const auto ext = record.depth.extension().string();
  if (ext == ".nvsd") {
    frame.depth = io::read_nvsd(record.depth);
  } else if (ext == ".png") {
    frame.depth = io::read_depth_png16(record.depth, io::read_scale(scale_sidecar(record.depth)));
  } else {
    throw IoError(record.depth.string(), "unsupported depth format (expected .nvsd or .png)");
  }
  if (!frame.rgb.same_size(frame.depth)) {
    throw ValidationError(record.name + ": resolution mismatch between image (" +
                          std::to_string(frame.rgb.height) + "x" + std::to_string(frame.rgb.width) +
                          ") and depth (" + std::to_string(frame.depth.height) + "x" +
                          std::to_string(frame.depth.width) + ")");
  }
  sanitize_depth(frame.depth, record.name);
  return frame;
}

std::vector<SampleRecord> scan_directory(const fs::path& root) {
  const fs::path rgb_dir = root / "rgb";
  if (!fs::is_directory(rgb_dir)) throw IoError(rgb_dir.string(), "missing rgb/ directory");
  std::vector<SampleRecord> records;
  for (const auto& entry : fs::directory_iterator(rgb_dir)) {
    if (!entry.is_regular_file() || !is_image_ext(entry.path())) continue;
    SampleRecord rec;
    rec.name = entry.path().stem().string();
    rec.image = entry.path();
    const fs::path nvsd = root / "depth" / (rec.name + ".nvsd");
    const fs::path png = root / "depth" / (rec.name + ".png");
    if (fs::exists(nvsd)) {
      rec.depth = nvsd;
    } else if (fs::exists(png)) {
      rec.depth = png;
    } else {
      throw IoError(nvsd.string(), "no depth map for " + rec.image.string());
    }
    const fs::path pose = root / "pose" / (rec.name + ".txt");
    if (fs::exists(pose)) rec.pose = pose;
    records.push_back(std::move(rec));
  }
  std::sort(records.begin(), records.end(),
            [](const SampleRecord& a, const SampleRecord& b) { return a.name < b.name; });
  return records;
}

std::vector<RGBDFrame> load_all(const std::vector<SampleRecord>& records) {
  std::vector<RGBDFrame> frames;
  frames.reserve(records.size());
  for (const auto& r : records) frames.push_back(load_sample(r));
  return frames;
}

SceneKind parse_scene_kind(const std::string& name) {
  if (name == "plane") return SceneKind::plane;
  if (name == "step") return SceneKind::step;
  if (name == "gradient") return SceneKind::gradient;
  throw ValidationError("unknown scene kind '" + name + "'");
}

RGBDFrame synth_scene(SceneKind kind, int size, std::uint64_t seed) {
  if (size < 4) throw ValidationError("synth_scene: size must be >= 4");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  struct Wave {
    double fx, fy, phase, amp;
  };
  // A handful of low-frequency plane waves per channel, 1-4 cycles per image.
  std::array<std::vector<Wave>, 3> waves;
  std::array<double, 3> base{};
  for (int c = 0; c < 3; ++c) {
    base[c] = 0.3 + 0.4 * unit(rng);
    for (int i = 0; i < 3; ++i) {
      const double freq = 1.0 + 3.0 * unit(rng);
      const double angle = 2.0 * std::numbers::pi * unit(rng);
      waves[c].push_back({freq * std::cos(angle), freq * std::sin(angle), 2.0 * std::numbers::pi * unit(rng),
                          0.08 + 0.08 * unit(rng)});
    }
  }

  RGBDFrame frame{Image(size, size, 3), Image(size, size, 1, 1.0f)};
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      const double u = static_cast<double>(x) / size;
      const double v = static_cast<double>(y) / size;
      for (int c = 0; c < 3; ++c) {
        double val = base[c];
        for (const auto& w : waves[c]) val += w.amp * std::sin(2.0 * std::numbers::pi * (w.fx * u + w.fy * v) + w.phase);
        frame.rgb.at(y, x, c) = static_cast<float>(std::clamp(val, 0.0, 1.0));
      }
    }
  }

  switch (kind) {
    case SceneKind::plane:
      break;
    case SceneKind::step: {
      const int band = std::max(1, size / 4);
      const int x0 = static_cast<int>(unit(rng) * (size - band));
      for (int y = 0; y < size; ++y) {
        for (int x = 0; x < size; ++x) frame.depth.at(y, x) = (x >= x0 && x < x0 + band) ? 1.0f : 2.0f;
      }
      break;
    }
    case SceneKind::gradient:
      for (int y = 0; y < size; ++y) {
        const float d = 1.0f + static_cast<float>(y) / static_cast<float>(size - 1);
        for (int x = 0; x < size; ++x) frame.depth.at(y, x) = d;
      }
      break;
  }
  return frame;
}

}  // namespace cheapnvs::dataset
