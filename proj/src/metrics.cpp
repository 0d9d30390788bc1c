#include "cheapnvs/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "cheapnvs/errors.hpp"

namespace cheapnvs::eval {

namespace {

double psnr_from_mse(double mse) {
  if (mse <= 0.0) return kPsnrCap;
  return std::min(kPsnrCap, 10.0 * std::log10(1.0 / mse));
}

Image as_luma(const Image& img) {
  if (img.channels == 1) return img;
  if (img.channels == 3) return rgb_to_luma(img);
  throw ShapeError("ssim: expected 1 or 3 channels");
}

std::vector<double> gaussian_window(int size, double sigma) {
  std::vector<double> g(size);
  double sum = 0.0;
  const int r = size / 2;
  for (int i = 0; i < size; ++i) {
    g[i] = std::exp(-((i - r) * (i - r)) / (2.0 * sigma * sigma));
    sum += g[i];
  }
  for (double& v : g) v /= sum;
  return g;
}

// Separable "valid" filtering of a single-channel field.
std::vector<double> filter_valid(const std::vector<double>& src, int h, int w,
                                 const std::vector<double>& g) {
  const int k = static_cast<int>(g.size());
  const int ow = w - k + 1;
  const int oh = h - k + 1;
  std::vector<double> tmp(static_cast<std::size_t>(h) * ow);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * src[static_cast<std::size_t>(y) * w + x + i];
      tmp[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  std::vector<double> out(static_cast<std::size_t>(oh) * ow);
  for (int y = 0; y < oh; ++y) {
    for (int x = 0; x < ow; ++x) {
      double s = 0.0;
      for (int i = 0; i < k; ++i) s += g[i] * tmp[static_cast<std::size_t>(y + i) * ow + x];
      out[static_cast<std::size_t>(y) * ow + x] = s;
    }
  }
  return out;
}

}  // namespace

double psnr(const Image& a, const Image& b) {
  require_same_shape(a, b, "psnr");
  if (a.data.empty()) throw ShapeError("psnr: empty images");
  double sse = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const double d = static_cast<double>(a.data[i]) - b.data[i];
    sse += d * d;
  }
  return psnr_from_mse(sse / static_cast<double>(a.data.size()));
}

double masked_psnr(const Image& a, const Image& b, const Image& region) {
  require_same_shape(a, b, "masked_psnr");
  require_channels(region, 1, "masked_psnr region");
  require_same_shape(a, region, "masked_psnr region", false);
  double sse = 0.0;
  std::size_t n = 0;
  for (std::size_t p = 0; p < region.data.size(); ++p) {
    if (region.data[p] <= 0.5f) continue;
    for (int c = 0; c < a.channels; ++c) {
      const std::size_t i = p * a.channels + c;
      const double d = static_cast<double>(a.data[i]) - b.data[i];
      sse += d * d;
    }
    n += a.channels;
  }
  if (n == 0) return kPsnrCap;
  return psnr_from_mse(sse / static_cast<double>(n));
}

double ssim(const Image& a, const Image& b) {
  require_same_shape(a, b, "ssim");
  constexpr int kWindow = 11;
  if (a.height < kWindow || a.width < kWindow) throw ShapeError("ssim: images must be at least 11x11");

  const Image la = as_luma(a);
  const Image lb = as_luma(b);
  const int h = a.height;
  const int w = a.width;
  const std::size_t n = la.pixels();

  std::vector<double> x(n), y(n), xx(n), yy(n), xy(n);
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = la.data[i];
    y[i] = lb.data[i];
    xx[i] = x[i] * x[i];
    yy[i] = y[i] * y[i];
    xy[i] = x[i] * y[i];
  }
  const auto g = gaussian_window(kWindow, 1.5);
  const auto mx = filter_valid(x, h, w, g);
  const auto my = filter_valid(y, h, w, g);
  const auto sxx = filter_valid(xx, h, w, g);
  const auto syy = filter_valid(yy, h, w, g);
  const auto sxy = filter_valid(xy, h, w, g);

  constexpr double c1 = 0.01 * 0.01;
  constexpr double c2 = 0.03 * 0.03;
  double total = 0.0;
  for (std::size_t i = 0; i < mx.size(); ++i) {
    const double vx = sxx[i] - mx[i] * mx[i];
    const double vy = syy[i] - my[i] * my[i];
    const double cov = sxy[i] - mx[i] * my[i];
    const double num = (2.0 * mx[i] * my[i] + c1) * (2.0 * cov + c2);
    const double den = (mx[i] * mx[i] + my[i] * my[i] + c1) * (vx + vy + c2);
    total += num / den;
  }
  return total / static_cast<double>(mx.size());
}

double mask_iou(const Image& a, const Image& b) {
  require_channels(a, 1, "mask_iou");
  require_same_shape(a, b, "mask_iou");
  std::size_t inter = 0;
  std::size_t uni = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool pa = a.data[i] > 0.5f;
    const bool pb = b.data[i] > 0.5f;
    inter += pa && pb;
    uni += pa || pb;
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

}  // namespace cheapnvs::eval
