#include "cheapnvs/teacher.hpp"

#include <algorithm>
#include <stdexcept>

#include "cheapnvs/errors.hpp"

namespace cheapnvs::training {

namespace {

void check_inputs(const Image& masked, const Image& holes) {
  require_channels(masked, 3, "inpaint teacher image");
  require_channels(holes, 1, "inpaint teacher mask");
  require_same_shape(masked, holes, "inpaint teacher", false);
}

}  // namespace

Image classical_fill(const Image& masked, const Image& holes) {
  check_inputs(masked, holes);
  const int h = masked.height;
  const int w = masked.width;
  Image out = masked;
  std::vector<unsigned char> known(masked.pixels());
  std::size_t missing = 0;
  for (std::size_t i = 0; i < known.size(); ++i) {
    known[i] = holes.data[i] < 0.5f;
    if (!known[i]) {
      ++missing;
      for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = 0.0f;
    }
  }
  if (missing == known.size()) throw std::runtime_error("inpaint teacher: no visible pixels");

  std::vector<std::size_t> frontier;
  std::vector<float> fill;
  while (missing > 0) {
    frontier.clear();
    fill.clear();
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (known[i]) continue;
        float sum[3] = {0.0f, 0.0f, 0.0f};
        int n = 0;
        for (int dy = -1; dy <= 1; ++dy) {
          for (int dx = -1; dx <= 1; ++dx) {
            const int yy = y + dy;
            const int xx = x + dx;
            if ((dx == 0 && dy == 0) || yy < 0 || yy >= h || xx < 0 || xx >= w) continue;
            const std::size_t j = static_cast<std::size_t>(yy) * w + xx;
            if (!known[j]) continue;
            for (int c = 0; c < 3; ++c) sum[c] += out.data[j * 3 + c];
            ++n;
          }
        }
        if (n == 0) continue;
        frontier.push_back(i);
        for (float s : sum) fill.push_back(s / static_cast<float>(n));
      }
    }
    // Commit after the pass so the result does not depend on scan order.
    for (std::size_t k = 0; k < frontier.size(); ++k) {
      const std::size_t i = frontier[k];
      for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = std::clamp(fill[k * 3 + c], 0.0f, 1.0f);
      known[i] = 1;
    }
    missing -= frontier.size();
  }
  return out;
}

Image mean_fill(const Image& masked, const Image& holes) {
  check_inputs(masked, holes);
  double sum[3] = {0.0, 0.0, 0.0};
  std::size_t n = 0;
  for (std::size_t i = 0; i < holes.pixels(); ++i) {
    if (holes.data[i] >= 0.5f) continue;
    for (int c = 0; c < 3; ++c) sum[c] += masked.data[i * 3 + c];
    ++n;
  }
  if (n == 0) throw std::runtime_error("inpaint teacher: no visible pixels");
  Image out = masked;
  for (std::size_t i = 0; i < holes.pixels(); ++i) {
    if (holes.data[i] < 0.5f) continue;
    for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = static_cast<float>(sum[c] / n);
  }
  return out;
}

InpaintTeacher classical_fill_teacher() { return &classical_fill; }

InpaintTeacher mean_fill_teacher() { return &mean_fill; }

InpaintTeacher constant_fill_teacher(std::array<float, 3> color) {
  return [color](const Image& masked, const Image& holes) {
    check_inputs(masked, holes);
    Image out = masked;
    for (std::size_t i = 0; i < holes.pixels(); ++i) {
      if (holes.data[i] < 0.5f) continue;
      for (int c = 0; c < 3; ++c) out.data[i * 3 + c] = color[c];
    }
    return out;
  };
}

}  // namespace cheapnvs::training
