#include "cheapnvs/warp_backend.hpp"

#include <dlfcn.h>

#include <array>
#include <atomic>
#include <cstdlib>
#include <cstring>
#include <mutex>

namespace cheapnvs::warp {

namespace {

std::atomic<cnvs_forward_warp_fn> g_native{nullptr};
std::once_flag g_env_once;

void try_env_library() {
  std::call_once(g_env_once, [] {
    if (g_native.load() != nullptr) return;
    if (const char* path = std::getenv(kNativeLibraryEnv); path != nullptr && *path != '\0') {
      load_native_kernel(path);
    }
  });
}

}  // namespace

Backend parse_backend(const std::string& name) {
  if (name == "reference") return Backend::reference;
  if (name == "native") return Backend::native;
  throw ValidationError("unknown warp backend '" + name + "' (expected reference|native)");
}

std::string to_string(Backend backend) { return backend == Backend::native ? "native" : "reference"; }

void set_native_kernel(cnvs_forward_warp_fn fn) { g_native.store(fn); }

void load_native_kernel(const std::filesystem::path& library) {
  void* handle = ::dlopen(library.c_str(), RTLD_NOW | RTLD_LOCAL);
  if (handle == nullptr) {
    const char* err = ::dlerror();
    throw ValidationError("cannot load native warp kernel: " + std::string(err ? err : library.string()));
  }
  void* sym = ::dlsym(handle, CNVS_NATIVE_WARP_SYMBOL);
  if (sym == nullptr) {
    throw ValidationError("native warp library lacks symbol " + std::string(CNVS_NATIVE_WARP_SYMBOL));
  }
  // The handle is intentionally kept open for the process lifetime.
  g_native.store(reinterpret_cast<cnvs_forward_warp_fn>(sym));
}

bool native_kernel_available() {
  try_env_library();
  return g_native.load() != nullptr;
}

WarpLabels call_kernel(cnvs_forward_warp_fn fn, const RGBDFrame& frame, const geometry::Extrinsics& pose,
                       const geometry::Intrinsics& k) {
  frame.validate();
  const int h = frame.height();
  const int w = frame.width();
  cnvs_warp_input in{};
  in.rgb = frame.rgb.data.data();
  in.depth = frame.depth.data.data();
  in.height = static_cast<std::uint32_t>(h);
  in.width = static_cast<std::uint32_t>(w);
  const auto p = pose.to_flat();
  const auto kf = k.to_flat();
  std::memcpy(in.pose, p.data(), sizeof(in.pose));
  std::memcpy(in.intrinsics, kf.data(), sizeof(in.intrinsics));

  WarpLabels labels{Image(h, w, 2), Image(h, w, 1), Image(h, w, 3), Image(h, w, 1)};
  cnvs_warp_output out{labels.shift.data.data(), labels.mask.data.data(), labels.warped_rgb.data.data(),
                       labels.target_depth.data.data(), in.height, in.width};
  const int status = fn(&in, &out);
  if (status != CNVS_OK) throw ValidationError("warp kernel failed with status " + std::to_string(status));
  return labels;
}

WarpLabels run_forward_warp(Backend backend, const RGBDFrame& frame, const geometry::Extrinsics& pose,
                            const geometry::Intrinsics& k) {
  // Both backends see the float32 pose and intrinsics that cross the C boundary.
  if (backend == Backend::reference) {
    return forward_warp(frame, geometry::Extrinsics::from_flat(pose.to_flat()),
                        geometry::Intrinsics::from_flat(k.to_flat()));
  }
  try_env_library();
  const auto fn = g_native.load();
  if (fn == nullptr) {
    throw ValidationError(std::string("native warp backend requested but no kernel is loaded (set ") +
                          kNativeLibraryEnv + ")");
  }
  return call_kernel(fn, frame, pose, k);
}

}  // namespace cheapnvs::warp

extern "C" int cnvs_forward_warp_reference(const cnvs_warp_input* in, cnvs_warp_output* out) {
  using namespace cheapnvs;
  if (in == nullptr || out == nullptr || in->rgb == nullptr || in->depth == nullptr || out->shift == nullptr ||
      out->mask == nullptr || out->warped_rgb == nullptr || out->target_depth == nullptr) {
    return CNVS_ERR_NULL;
  }
  if (in->height == 0 || in->width == 0 || out->height != in->height || out->width != in->width) {
    return CNVS_ERR_DIMS;
  }
  try {
    const int h = static_cast<int>(in->height);
    const int w = static_cast<int>(in->width);
    const std::size_t n = static_cast<std::size_t>(h) * w;
    RGBDFrame frame{Image(h, w, 3), Image(h, w, 1)};
    std::memcpy(frame.rgb.data.data(), in->rgb, n * 3 * sizeof(float));
    std::memcpy(frame.depth.data.data(), in->depth, n * sizeof(float));
    std::array<float, 12> pose{};
    std::array<float, 6> k{};
    std::memcpy(pose.data(), in->pose, sizeof(in->pose));
    std::memcpy(k.data(), in->intrinsics, sizeof(in->intrinsics));
    const auto intr = geometry::Intrinsics::from_flat(k);
    if (intr.width != w || intr.height != h) return CNVS_ERR_DIMS;
    const WarpLabels labels = warp::forward_warp(frame, geometry::Extrinsics::from_flat(pose), intr);
    std::memcpy(out->shift, labels.shift.data.data(), n * 2 * sizeof(float));
    std::memcpy(out->mask, labels.mask.data.data(), n * sizeof(float));
    std::memcpy(out->warped_rgb, labels.warped_rgb.data.data(), n * 3 * sizeof(float));
    std::memcpy(out->target_depth, labels.target_depth.data.data(), n * sizeof(float));
    return CNVS_OK;
  } catch (const cheapnvs::ValidationError&) {
    return CNVS_ERR_INVALID;
  } catch (...) {
    return CNVS_ERR_INTERNAL;
  }
}
