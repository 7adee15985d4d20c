#ifndef WNMCMC_H
#define WNMCMC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WnStatus {
  WN_STATUS_OK = 0,
  WN_STATUS_NULL_POINTER = 1,
  WN_STATUS_DOMAIN = 2,
  WN_STATUS_NUMERIC = 3,
  WN_STATUS_UNSUPPORTED = 4,
  WN_STATUS_IO = 5,
  WN_STATUS_FORMAT = 6,
  WN_STATUS_CONFIG = 7,
  WN_STATUS_PANIC = 8,
} WnStatus;

/**
 * Coefficient law of a series prior.
 */
typedef enum WnLaw {
  WN_LAW_GAUSSIAN = 0,
  WN_LAW_UNIFORM = 1,
  /**
   * Uses the `q` argument.
   */
  WN_LAW_BESOV = 2,
} WnLaw;

/**
 * Finite-volume Darcy solver on the unit square or interval with zero
 * pressure on the boundary and a constant source.
 */
typedef struct WnDarcy WnDarcy;

/**
 * Series prior `m + sum_j rho_j Lambda(xi_j) phi_j` on the unit cube with a
 * cosine basis, evaluated at fixed points.
 */
typedef struct WnSeriesTransform WnSeriesTransform;

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
size_t wn_last_error_message(char *buf, size_t len);

/**
 * Library version as a static NUL-terminated string.
 */
const char *wn_version(void);

/**
 * `Lambda(xi)` for the uniform law on `(-1, 1)`.
 *
 * # Safety
 * `out` must be null or point to a writable `double`.
 */
enum WnStatus wn_lambda_uniform(double xi, double *out);

/**
 * `Lambda(xi)` for the law with density proportional to `exp(-|x|^q / 2)`.
 *
 * # Safety
 * `out` must be null or point to a writable `double`.
 */
enum WnStatus wn_lambda_besov(double xi, double q, double *out);

/**
 * Builds a series transform. `weights` holds `n_modes` values;
 * `points` holds `n_points * dim` coordinates, point by point.
 *
 * # Safety
 * Pointers must reference arrays of the stated lengths; `out` must point to a
 * writable handle slot.
 */
enum WnStatus wn_series_transform_new(enum WnLaw law,
                                      double q,
                                      size_t dim,
                                      const double *weights,
                                      size_t n_modes,
                                      double mean,
                                      const double *points,
                                      size_t n_points,
                                      struct WnSeriesTransform **out);

/**
 * Number of latent entries the transform expects.
 *
 * # Safety
 * `t` must be a live handle or null.
 */
size_t wn_series_transform_latent_len(const struct WnSeriesTransform *t);

/**
 * Number of evaluation points.
 *
 * # Safety
 * `t` must be a live handle or null.
 */
size_t wn_series_transform_n_points(const struct WnSeriesTransform *t);

/**
 * Evaluates `T(xi)` at the points.
 *
 * # Safety
 * `t` must be a live handle; `xi` and `out` must reference arrays of the
 * stated lengths.
 */
enum WnStatus wn_series_transform_apply(const struct WnSeriesTransform *t,
                                        const double *xi,
                                        size_t xi_len,
                                        double *out,
                                        size_t out_len);

/**
 * # Safety
 * `t` must be null or a handle from [`wn_series_transform_new`] not yet freed.
 */
void wn_series_transform_free(struct WnSeriesTransform *t);

/**
 * # Safety
 * `out` must point to a writable handle slot.
 */
enum WnStatus wn_darcy_new(size_t dim, size_t nodes_per_axis, double source, struct WnDarcy **out);

/**
 * Total number of grid nodes, boundary included.
 *
 * # Safety
 * `d` must be a live handle or null.
 */
size_t wn_darcy_n_nodes(const struct WnDarcy *d);

/**
 * Solves for the pressure given a positive nodal permeability.
 *
 * # Safety
 * `d` must be a live handle; `perm` and `pressure` must reference `len`
 * doubles each.
 */
enum WnStatus wn_darcy_solve(const struct WnDarcy *d,
                             const double *perm,
                             double *pressure,
                             size_t len);

/**
 * # Safety
 * `d` must be null or a handle from [`wn_darcy_new`] not yet freed.
 */
void wn_darcy_free(struct WnDarcy *d);

/**
 * Runs an experiment from configuration text (`key = value` lines) and
 * writes its CSV files into the configured output directory.
 *
 * # Safety
 * `config` must be a NUL-terminated UTF-8 string.
 */
enum WnStatus wn_run_experiment(const char *config);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WNMCMC_H */
