#ifndef WILLMORE_H
#define WILLMORE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WillmoreStatus {
  WILLMORE_STATUS_OK = 0,
  WILLMORE_STATUS_NULL_POINTER = 1,
  WILLMORE_STATUS_INVALID_UTF8 = 2,
  WILLMORE_STATUS_INVALID_ARGUMENT = 3,
  WILLMORE_STATUS_DOMAIN = 4,
  WILLMORE_STATUS_UNSUPPORTED = 5,
  WILLMORE_STATUS_DEGENERATE = 6,
  WILLMORE_STATUS_MAP_SINGULARITY = 7,
  WILLMORE_STATUS_BUFFER_TOO_SMALL = 8,
  WILLMORE_STATUS_PANIC = 9,
} WillmoreStatus;

/**
 * Opaque chart handle.
 */
typedef struct WillmoreChart WillmoreChart;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Builds a family chart from a tag (`s2xs2`, `anchor`, `ellipsoid`, ...)
 * and a `key=value,...` parameter list (may be null for defaults).
 *
 * # Safety
 * `family` and `params` must be null or NUL-terminated strings; `out` must
 * be null or writable.
 */
enum WillmoreStatus willmore_chart_new(const char *family,
                                       const char *params,
                                       struct WillmoreChart **out);

/**
 * Releases a chart; null is ignored.
 *
 * # Safety
 * `chart` must be null or a handle from this library not yet freed.
 */
void willmore_chart_free(struct WillmoreChart *chart);

/**
 * Intrinsic dimension and the dimension of the ambient space after any maps.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum WillmoreStatus willmore_chart_dims(const struct WillmoreChart *chart,
                                        uint32_t *out_k,
                                        uint32_t *out_ambient);

/**
 * Energy `E`, `Ē = 128 E` (NaN when `k = 2`), and area at a quadrature resolution.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum WillmoreStatus willmore_chart_energy(const struct WillmoreChart *chart,
                                          uint32_t resolution,
                                          double *out_e,
                                          double *out_ebar,
                                          double *out_area);

/**
 * Sup-norm of the obstruction field and its value relative to the summed term sizes.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum WillmoreStatus willmore_chart_obstruction(const struct WillmoreChart *chart,
                                               uint32_t resolution,
                                               double *out_sup,
                                               double *out_scaled_sup);

/**
 * New chart: the stereographic image of a sphere-background chart.
 *
 * # Safety
 * Pointers must be valid or null.
 */
enum WillmoreStatus willmore_chart_stereographic(const struct WillmoreChart *chart,
                                                 struct WillmoreChart **out);

/**
 * Closed-form `Ē` of a product family (`s2xs2`, `s1xs3`, `s1s1s2`, `torus4`)
 * at ratio parameters `t[0..len]`.
 *
 * # Safety
 * `t` must point to `len` readable doubles.
 */
enum WillmoreStatus willmore_family_energy(const char *family,
                                           const double *t,
                                           size_t len,
                                           double *out);

/**
 * `Ē` of the dilated anchor ring `δ_a(T_{1,1/√2})` from its one-dimensional integral.
 *
 * # Safety
 * `out` must be valid or null.
 */
enum WillmoreStatus willmore_dilated_energy(double a, uint32_t resolution, double *out);

/**
 * Jacobi spectrum of `s4` or `s2xs2`: writes up to `capacity` rows of
 * (eigenvalue, multiplicity) and the full row count to `out_len`.
 * Returns `BufferTooSmall` when `capacity` is short; `out_len` is still set.
 *
 * # Safety
 * `lambdas` and `mults` must hold `capacity` elements.
 */
enum WillmoreStatus willmore_jacobi_spectrum(const char *surface,
                                             uint32_t jmax,
                                             int64_t *lambdas,
                                             uint64_t *mults,
                                             size_t capacity,
                                             size_t *out_len);

/**
 * Copies the calling thread's last error message (NUL-terminated, possibly
 * truncated) into `buf` and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t willmore_last_error(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *willmore_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WILLMORE_H */
