#ifndef VALGEBRA_H
#define VALGEBRA_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Convolution coefficient selector.
 */
typedef enum VgConvMode {
  VG_CONV_MODE_UNIT = 0,
  VG_CONV_MODE_PAPER = 1,
} VgConvMode;

/**
 * Status codes; the nonzero values match the command-line exit codes where
 * they overlap.
 */
typedef enum VgStatus {
  VG_STATUS_OK = 0,
  VG_STATUS_NULL_POINTER = 1,
  VG_STATUS_MALFORMED = 2,
  VG_STATUS_PRECONDITION = 3,
  VG_STATUS_NO_CONVERGENCE = 4,
  VG_STATUS_HYPOTHESIS = 5,
  VG_STATUS_PANIC = 6,
} VgStatus;

/**
 * Opaque convex polytope.
 */
typedef struct VgBody VgBody;

/**
 * Opaque linear map.
 */
typedef struct VgMap VgMap;

/**
 * Opaque valuation.
 */
typedef struct VgValuation VgValuation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len - 1` bytes) and returns the full message length.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
uintptr_t vg_last_error(char *buf, uintptr_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *vg_version(void);

/**
 * Parses a body from `{"dim": n, "vertices": [...]}`.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum VgStatus vg_body_from_json(const char *json, struct VgBody **out);

/**
 * Convex hull of `count` points in dimension `dim`, stored row by row.
 *
 * # Safety
 * `coords` must point to `dim * count` doubles; `out` must be writable.
 */
enum VgStatus vg_body_from_points(uintptr_t dim,
                                  const double *coords,
                                  uintptr_t count,
                                  struct VgBody **out);

/**
 * # Safety
 * `body` must be null or a handle from this library, not yet freed.
 */
void vg_body_free(struct VgBody *body);

/**
 * # Safety
 * `body` must be a live handle; `out` must be writable.
 */
enum VgStatus vg_body_volume(const struct VgBody *body, double *out);

/**
 * # Safety
 * `body` must be a live handle; `out` must be writable.
 */
enum VgStatus vg_body_dim(const struct VgBody *body, uintptr_t *out);

/**
 * Mixed volume of `count` bodies, where `count` equals their dimension.
 *
 * # Safety
 * `bodies` must point to `count` live handles; `out` must be writable.
 */
enum VgStatus vg_mixed_volume(const struct VgBody *const *bodies, uintptr_t count, double *out);

/**
 * Parses a valuation from `{"dim", "degree", "terms"}` JSON.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum VgStatus vg_valuation_from_json(const char *json, struct VgValuation **out);

/**
 * # Safety
 * `v` must be null or a handle from this library, not yet freed.
 */
void vg_valuation_free(struct VgValuation *v);

/**
 * # Safety
 * `v` must be a live handle; `out` must be writable.
 */
enum VgStatus vg_valuation_degree(const struct VgValuation *v, uintptr_t *out);

/**
 * `phi(L)`.
 *
 * # Safety
 * `v` and `body` must be live handles; `out` must be writable.
 */
enum VgStatus vg_valuation_evaluate(const struct VgValuation *v,
                                    const struct VgBody *body,
                                    double *out);

/**
 * Convolution `a * b`; a degree-0 result is read with
 * [`vg_valuation_constant`].
 *
 * # Safety
 * `a` and `b` must be live handles; `out` must be writable.
 */
enum VgStatus vg_valuation_convolve(const struct VgValuation *a,
                                    const struct VgValuation *b,
                                    enum VgConvMode mode,
                                    struct VgValuation **out);

/**
 * Value of a degree-0 valuation.
 *
 * # Safety
 * `v` must be a live handle; `out` must be writable.
 */
enum VgStatus vg_valuation_constant(const struct VgValuation *v, double *out);

/**
 * Linear map from `dim * dim` doubles in row-major order.
 *
 * # Safety
 * `rows` must point to `dim * dim` doubles; `out` must be writable.
 */
enum VgStatus vg_map_from_rows(uintptr_t dim, const double *rows, struct VgMap **out);

/**
 * # Safety
 * `g` must be null or a handle from this library, not yet freed.
 */
void vg_map_free(struct VgMap *g);

/**
 * Acts on a body: `g(body)`.
 *
 * # Safety
 * `g` and `body` must be live handles; `out` must be writable.
 */
enum VgStatus vg_map_apply(const struct VgMap *g, const struct VgBody *body, struct VgBody **out);

/**
 * `|det g|^{-1}` times the product of the `codeg` largest eigenvalue moduli.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum VgStatus vg_spectral_degree(const struct VgMap *g, uintptr_t codeg, double *out);

/**
 * k-th root of the degree of `g^kmax` relative to the unit cube.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum VgStatus vg_dynamical_degree(const struct VgMap *g,
                                  uintptr_t codeg,
                                  uint32_t kmax,
                                  double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* VALGEBRA_H */
