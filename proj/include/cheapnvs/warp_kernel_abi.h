/* C boundary between the host and an accelerated forward-warp kernel.
 *
 * All buffers are contiguous float32, interleaved HWC. The caller owns every
 * buffer; the kernel only writes the output arrays. The kernel must produce
 * byte-identical results to the reference splat (same tie-break order). */
#ifndef CHEAPNVS_WARP_KERNEL_ABI_H
#define CHEAPNVS_WARP_KERNEL_ABI_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum cnvs_status {
  CNVS_OK = 0,
  CNVS_ERR_NULL = 1,      /* a required pointer is null */
  CNVS_ERR_DIMS = 2,      /* output dims disagree with input dims, or zero size */
  CNVS_ERR_INVALID = 3,   /* invalid pose/intrinsics/depth */
  CNVS_ERR_INTERNAL = 4
};

typedef struct cnvs_warp_input {
  const float* rgb;        /* H*W*3, values in [0, 1] */
  const float* depth;      /* H*W, > 0 */
  uint32_t height;
  uint32_t width;
  float pose[12];          /* row-major [R|t], target camera in the source frame */
  float intrinsics[6];     /* fx, fy, cx, cy, width, height */
} cnvs_warp_input;

typedef struct cnvs_warp_output {
  float* shift;            /* H*W*2, (dx, dy) */
  float* mask;             /* H*W, exactly 0 or 1 */
  float* warped_rgb;       /* H*W*3 */
  float* target_depth;     /* H*W, FLT_MAX at holes */
  uint32_t height;
  uint32_t width;
} cnvs_warp_output;

typedef int (*cnvs_forward_warp_fn)(const cnvs_warp_input* in, cnvs_warp_output* out);

/* Symbol name an accelerated shared library must export. */
#define CNVS_NATIVE_WARP_SYMBOL "cnvs_forward_warp_fast"

/* Reference implementation behind the same boundary. Never throws. */
int cnvs_forward_warp_reference(const cnvs_warp_input* in, cnvs_warp_output* out);

#ifdef __cplusplus
}
#endif

#endif /* CHEAPNVS_WARP_KERNEL_ABI_H */
