#pragma once

#include <filesystem>
#include <string>

#include "cheapnvs/warp_kernel_abi.h"
#include "cheapnvs/warp_oracle.hpp"

namespace cheapnvs::warp {

enum class Backend { reference, native };

Backend parse_backend(const std::string& name);
std::string to_string(Backend backend);

/// Environment variable naming the shared library that exports
/// CNVS_NATIVE_WARP_SYMBOL. Read lazily on first native dispatch.
inline constexpr const char* kNativeLibraryEnv = "CHEAPNVS_NATIVE_WARP";

/// Installs a kernel directly (e.g. statically linked). nullptr uninstalls.
void set_native_kernel(cnvs_forward_warp_fn fn);

/// dlopen()s `library` and installs its CNVS_NATIVE_WARP_SYMBOL. Throws
/// ValidationError if the library or symbol cannot be found.
void load_native_kernel(const std::filesystem::path& library);

bool native_kernel_available();

/// forward_warp through the selected backend. The native path goes through
/// the C boundary; a non-zero status becomes a ValidationError carrying it.
WarpLabels run_forward_warp(Backend backend, const RGBDFrame& frame, const geometry::Extrinsics& pose,
                            const geometry::Intrinsics& k);

/// Calls any kernel through the C boundary and converts the buffers back.
WarpLabels call_kernel(cnvs_forward_warp_fn fn, const RGBDFrame& frame, const geometry::Extrinsics& pose,
                       const geometry::Intrinsics& k);

}  // namespace cheapnvs::warp
