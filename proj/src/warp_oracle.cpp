#include "cheapnvs/warp_oracle.hpp"

#include <algorithm>
#include <cmath>
#include <thread>
#include <vector>

#include "cheapnvs/compositor.hpp"

namespace cheapnvs {

void RGBDFrame::validate() const {
  require_channels(rgb, 3, "frame rgb");
  require_channels(depth, 1, "frame depth");
  require_same_shape(rgb, depth, "frame rgb/depth", false);
  if (rgb.empty()) throw ShapeError("frame is empty");
  for (float v : rgb.data) {
    if (!(v >= 0.0f && v <= 1.0f)) throw ValidationError("frame rgb outside [0, 1]");
  }
  for (float d : depth.data) {
    if (!(d > 0.0f) || !std::isfinite(d)) throw ValidationError("frame depth must be finite and > 0");
  }
}

float RGBDFrame::median_depth() const { return median(depth.data); }

namespace warp {

namespace {

struct ZEntry {
  double z = std::numeric_limits<double>::infinity();
  std::int64_t source = -1;

  bool beats(const ZEntry& other) const {
    return z < other.z || (z == other.z && source < other.source);
  }
};

void splat_rows(const RGBDFrame& frame, const geometry::Extrinsics& to_target,
                const geometry::Intrinsics& k, int row_begin, int row_end,
                std::vector<ZEntry>& zbuf) {
  const int w = frame.width();
  const int h = frame.height();
  for (int y = row_begin; y < row_end; ++y) {
    for (int x = 0; x < w; ++x) {
      const double d = frame.depth.at(y, x);
      const Eigen::Vector3d src = geometry::unproject({x, y}, d, k);
      const auto proj = geometry::try_project(geometry::transform_point(src, to_target), k);
      if (!proj) continue;
      const double qx = std::floor(proj->pixel.x() + 0.5);
      const double qy = std::floor(proj->pixel.y() + 0.5);
      if (!(qx >= 0.0 && qx < w && qy >= 0.0 && qy < h)) continue;
      const ZEntry cand{proj->depth, static_cast<std::int64_t>(y) * w + x};
      ZEntry& slot = zbuf[static_cast<std::size_t>(qy) * w + static_cast<std::size_t>(qx)];
      if (cand.beats(slot)) slot = cand;
    }
  }
}

}  // namespace

WarpLabels forward_warp(const RGBDFrame& frame, const geometry::Extrinsics& pose,
                        const geometry::Intrinsics& k, const WarpOptions& options) {
  frame.validate();
  pose.validate();
  k.validate();
  if (k.width != frame.width() || k.height != frame.height()) {
    throw ShapeError("forward_warp: intrinsics size does not match frame");
  }

  const int h = frame.height();
  const int w = frame.width();
  const geometry::Extrinsics to_target = pose.inverse();

  std::vector<ZEntry> zbuf(frame.rgb.pixels());
  const int workers = std::clamp(options.threads, 1, h);
  if (workers == 1) {
    splat_rows(frame, to_target, k, 0, h, zbuf);
  } else {
    std::vector<std::vector<ZEntry>> partial(workers, std::vector<ZEntry>(zbuf.size()));
    std::vector<std::jthread> pool;
    for (int t = 0; t < workers; ++t) {
      const int begin = h * t / workers;
      const int end = h * (t + 1) / workers;
      pool.emplace_back([&, t, begin, end] { splat_rows(frame, to_target, k, begin, end, partial[t]); });
    }
    pool.clear();
    for (const auto& part : partial) {
      for (std::size_t i = 0; i < zbuf.size(); ++i) {
        if (part[i].beats(zbuf[i])) zbuf[i] = part[i];
      }
    }
  }

  WarpLabels out{Image(h, w, 2), Image(h, w, 1), Image(h, w, 3), Image(h, w, 1, kHoleDepth)};
  for (int qy = 0; qy < h; ++qy) {
    for (int qx = 0; qx < w; ++qx) {
      const ZEntry& e = zbuf[static_cast<std::size_t>(qy) * w + qx];
      if (e.source < 0) continue;
      const int px = static_cast<int>(e.source % w);
      const int py = static_cast<int>(e.source / w);
      out.mask.at(qy, qx) = 1.0f;
      out.shift.at(qy, qx, 0) = static_cast<float>(px - qx);
      out.shift.at(qy, qx, 1) = static_cast<float>(py - qy);
      for (int c = 0; c < 3; ++c) out.warped_rgb.at(qy, qx, c) = frame.rgb.at(py, px, c);
      out.target_depth.at(qy, qx) = static_cast<float>(e.z);
    }
  }
  return out;
}

Image grid_sample(const Image& image, const ShiftMap& shift, Border border) {
  require_channels(shift, 2, "grid_sample shift");
  require_same_shape(image, shift, "grid_sample", false);
  const int h = image.height;
  const int w = image.width;
  const int ch = image.channels;
  Image out(h, w, ch);

  auto tap = [&](int y, int x, int c) -> float {
    if (x < 0 || x >= w || y < 0 || y >= h) return 0.0f;
    return image.at(y, x, c);
  };

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sx = x + static_cast<double>(shift.at(y, x, 0));
      double sy = y + static_cast<double>(shift.at(y, x, 1));
      if (border == Border::clamp) {
        sx = std::clamp(sx, 0.0, static_cast<double>(w - 1));
        sy = std::clamp(sy, 0.0, static_cast<double>(h - 1));
      }
      const double fx0 = std::floor(sx);
      const double fy0 = std::floor(sy);
      const int x0 = static_cast<int>(fx0);
      const int y0 = static_cast<int>(fy0);
      const double ax = sx - fx0;
      const double ay = sy - fy0;
      for (int c = 0; c < ch; ++c) {
        // Zero-weight taps are skipped so exact integer samples return the
        // source value bit-for-bit, even next to the border.
        double v = 0.0;
        if (ax < 1.0 && ay < 1.0) v += (1.0 - ax) * (1.0 - ay) * tap(y0, x0, c);
        if (ax > 0.0 && ay < 1.0) v += ax * (1.0 - ay) * tap(y0, x0 + 1, c);
        if (ax < 1.0 && ay > 0.0) v += (1.0 - ax) * ay * tap(y0 + 1, x0, c);
        if (ax > 0.0 && ay > 0.0) v += ax * ay * tap(y0 + 1, x0 + 1, c);
        out.at(y, x, c) = static_cast<float>(v);
      }
    }
  }
  return out;
}

TrainingSample assemble_sample(const RGBDFrame& frame, const geometry::Extrinsics& pose, WarpLabels labels,
                               const training::InpaintTeacher& teacher) {
  TrainingSample sample;
  sample.frame = frame;
  sample.pose = pose;
  sample.labels = std::move(labels);

  Image holes(frame.height(), frame.width(), 1);
  for (std::size_t i = 0; i < holes.data.size(); ++i) holes.data[i] = 1.0f - sample.labels.mask.data[i];
  sample.inpaint_gt = teacher(sample.labels.warped_rgb, holes);
  require_same_shape(sample.inpaint_gt, frame.rgb, "inpaint teacher output");

  sample.target_gt = compositor::synthesize(frame.rgb, sample.labels.shift, sample.labels.mask,
                                            sample.inpaint_gt);
  return sample;
}

TrainingSample make_labels(const RGBDFrame& frame, const geometry::Extrinsics& pose,
                           const geometry::Intrinsics& k, const training::InpaintTeacher& teacher,
                           const WarpOptions& options) {
  return assemble_sample(frame, pose, forward_warp(frame, pose, k, options), teacher);
}

}  // namespace warp
}  // namespace cheapnvs
