#ifndef HTYPE_H
#define HTYPE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  HTYPE_STATUS_OK = 0,
  HTYPE_STATUS_NULL_POINTER = 1,
  HTYPE_STATUS_INVALID_ARGUMENT = 2,
  HTYPE_STATUS_INADMISSIBLE = 3,
  HTYPE_STATUS_OUT_OF_DOMAIN = 4,
  HTYPE_STATUS_INTEGRATION = 5,
  HTYPE_STATUS_NO_CONVERGENCE = 6,
  HTYPE_STATUS_RANK_DEFICIENT = 7,
  HTYPE_STATUS_HYPOTHESIS = 8,
  HTYPE_STATUS_UNKNOWN_MODEL = 9,
  HTYPE_STATUS_IO = 10,
  HTYPE_STATUS_PANIC = 11,
} HtypeStatus;

/**
 * Heat kernel of an H-type group.
 */
typedef struct HtypeKernel HtypeKernel;

/**
 * A foliation model.
 */
typedef struct HtypeModel HtypeModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or valid for `len` bytes.
 */
size_t htype_last_error(char *buf, size_t len);

/**
 * Build a model from a registry id such as `"hopf-s3@2"`.
 *
 * # Safety
 * `id` must be a NUL-terminated string; `out` must be writable.
 */
HtypeStatus htype_model_new(const char *id, HtypeModel **out);

/**
 * # Safety
 * `model` must be null or a handle from [`htype_model_new`] not yet freed.
 */
void htype_model_free(HtypeModel *model);

/**
 * Horizontal and vertical ranks.
 *
 * # Safety
 * Pointers must be valid.
 */
HtypeStatus htype_model_dims(const HtypeModel *model, size_t *n, size_t *m);

/**
 * `κ_H` and `τ_V` at a chart point of length `n + m`.
 *
 * # Safety
 * `point` must hold `len` doubles; outputs must be writable.
 */
HtypeStatus htype_model_invariants(const HtypeModel *model,
                                   const double *point,
                                   size_t len,
                                   double *kappa_h,
                                   double *tau_v);

/**
 * Popp-normalized second heat invariant at the model's base point.
 *
 * # Safety
 * Pointers must be valid.
 */
HtypeStatus htype_c1(const HtypeModel *model, size_t s_nodes, double *value, double *stderr);

/**
 * # Safety
 * `out` must be writable.
 */
HtypeStatus htype_kernel_new(size_t n, size_t m, HtypeKernel **out);

/**
 * # Safety
 * `kernel` must be null or a live handle from [`htype_kernel_new`].
 */
void htype_kernel_free(HtypeKernel *kernel);

/**
 * `K(t; x, z)` against Lebesgue measure; `xz` holds `n + m` doubles.
 *
 * # Safety
 * `xz` must hold `len` doubles; `out` must be writable.
 */
HtypeStatus htype_kernel_value(const HtypeKernel *kernel,
                               double t,
                               const double *xz,
                               size_t len,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HTYPE_H */
