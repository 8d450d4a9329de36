#ifndef NNCOMPLETE_H
#define NNCOMPLETE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum NncStatus {
  NNC_STATUS_OK = 0,
  NNC_STATUS_NULL_POINTER = 1,
  NNC_STATUS_INVALID_ARGUMENT = 2,
  NNC_STATUS_DIMENSION_MISMATCH = 3,
  NNC_STATUS_INDEX_OUT_OF_RANGE = 4,
  NNC_STATUS_ALL_MISSING = 5,
  /**
   * No donor could be found for a target entry.
   */
  NNC_STATUS_NO_DONOR = 6,
  NNC_STATUS_PARSE = 7,
  NNC_STATUS_IO = 8,
  NNC_STATUS_NO_CONVERGENCE = 9,
  /**
   * A Rust panic was caught at the boundary.
   */
  NNC_STATUS_PANIC = 10,
} NncStatus;

/**
 * Scalar estimators reachable from C.
 */
typedef enum NncMethod {
  NNC_METHOD_ROWNN = 0,
  NNC_METHOD_COLNN = 1,
  NNC_METHOD_TSNN = 2,
  NNC_METHOD_DRNN = 3,
  NNC_METHOD_AUTONN = 4,
  NNC_METHOD_AWNN = 5,
  NNC_METHOD_USVT = 6,
  NNC_METHOD_SOFTIMPUTE = 7,
} NncMethod;

/**
 * Opaque scalar panel with a missingness mask.
 */
typedef struct NncMatrix NncMatrix;

/**
 * Hyperparameters for every method; each method reads the fields it uses.
 */
typedef struct NncParams {
  double eta_row;
  /**
   * `eta_row` is a percentile in [0, 100] rather than a distance.
   */
  bool eta_row_is_percentile;
  double eta_col;
  bool eta_col_is_percentile;
  double alpha;
  /**
   * AWNN regularization; zero or NaN selects the default.
   */
  double awnn_reg;
  double usvt_eta;
  double si_lambda;
  size_t si_max_iter;
  double si_tol;
} NncParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *nnc_version(void);

/**
 * Message of the last failed call on this thread, or an empty string. The
 * pointer stays valid until the next call into the library on this thread.
 */
const char *nnc_last_error(void);

/**
 * Default hyperparameters.
 */
struct NncParams nnc_params_default(void);

/**
 * Builds a matrix from row-major `values` and `mask` (nonzero means
 * observed). Values under a zero mask are ignored and may be NaN.
 *
 * # Safety
 * `values` and `mask` must point to `n_rows * n_cols` readable elements and
 * `out` must be writable.
 */
enum NncStatus nnc_matrix_new(size_t n_rows,
                              size_t n_cols,
                              const double *values,
                              const uint8_t *mask,
                              struct NncMatrix **out);

/**
 * Releases a matrix. Null is ignored.
 *
 * # Safety
 * `m` must be null or a handle from this library not yet freed.
 */
void nnc_matrix_free(struct NncMatrix *m);

/**
 * # Safety
 * `m` must be a live handle; `n_rows`, `n_cols` and `n_observed` must be
 * writable or null.
 */
enum NncStatus nnc_matrix_dims(const struct NncMatrix *m,
                               size_t *n_rows,
                               size_t *n_cols,
                               size_t *n_observed);

/**
 * Copies values and mask out row-major; masked cells read as NaN.
 *
 * # Safety
 * `values` and `mask` must each be null or hold `n_rows * n_cols` writable
 * elements.
 */
enum NncStatus nnc_matrix_copy_out(const struct NncMatrix *m, double *values, uint8_t *mask);

/**
 * Loads a `row_id,col_id,value` CSV. Rows and columns are numbered in order
 * of first appearance.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` writable.
 */
enum NncStatus nnc_matrix_load_long_csv(const char *path, struct NncMatrix **out);

/**
 * Draws a synthetic low-rank panel. When `theta` is non-null the noiseless
 * signal is written to it row-major.
 *
 * # Safety
 * `out` must be writable; `theta` must be null or hold `n_rows * n_cols`
 * writable elements.
 */
enum NncStatus nnc_generate_scalar(size_t n_rows,
                                   size_t n_cols,
                                   size_t rank,
                                   double noise_sd,
                                   double propensity,
                                   uint64_t seed,
                                   struct NncMatrix **out,
                                   double *theta);

/**
 * Imputes one entry. `fallback_used` and `neighbor_count` may be null.
 *
 * # Safety
 * `m` must be a live handle, `params` readable and `value` writable.
 */
enum NncStatus nnc_impute(const struct NncMatrix *m,
                          enum NncMethod method,
                          const struct NncParams *params,
                          size_t row,
                          size_t col,
                          double *value,
                          bool *fallback_used,
                          size_t *neighbor_count);

/**
 * Fills `out` (row-major, `n_rows * n_cols`) with observed values and
 * imputes every missing cell. Cells that cannot be imputed are set to NaN
 * and counted in `n_failed` (which may be null); they do not fail the call.
 *
 * # Safety
 * `m` must be a live handle, `params` readable and `out` hold
 * `n_rows * n_cols` writable elements.
 */
enum NncStatus nnc_complete(const struct NncMatrix *m,
                            enum NncMethod method,
                            const struct NncParams *params,
                            double *out,
                            size_t *n_failed);

/**
 * Tunes `method` on a seeded holdout of the observed cells with the default
 * grids. `best` receives the defaults overwritten by the tuned values;
 * `score` (may be null) the holdout mean absolute error.
 *
 * # Safety
 * `m` must be a live handle and `best` writable.
 */
enum NncStatus nnc_tune(const struct NncMatrix *m,
                        enum NncMethod method,
                        uint64_t seed,
                        struct NncParams *best,
                        double *score);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NNCOMPLETE_H */
