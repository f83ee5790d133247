#ifndef DISCTEST_H
#define DISCTEST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible function.
 */
typedef enum DtStatus {
  DT_STATUS_OK = 0,
  DT_STATUS_NULL_POINTER = 1,
  DT_STATUS_INVALID_ARGUMENT = 2,
  DT_STATUS_DIMENSION_MISMATCH = 3,
  DT_STATUS_INVALID_CONFIG = 4,
  DT_STATUS_UNSUPPORTED = 5,
  /**
   * The handle is not in a state that allows the call, e.g. reading
   * results before `dt_experiment_run`.
   */
  DT_STATUS_INVALID_STATE = 6,
  DT_STATUS_BUFFER_TOO_SMALL = 7,
  DT_STATUS_PANIC = 99,
} DtStatus;

/**
 * Test selector for experiment accessors.
 */
typedef enum DtTest {
  DT_TEST_LIKELIHOOD = 0,
  DT_TEST_MMD = 1,
  DT_TEST_KS = 2,
} DtTest;

/**
 * Opaque experiment: a parsed config plus, after a run, its results.
 */
typedef struct DtExperiment DtExperiment;

/**
 * Opaque training-set builder.
 */
typedef struct DtTraining DtTraining;

/**
 * Classification result. Indices are zero-based.
 */
typedef struct DtVerdict {
  size_t cluster;
  size_t member;
  double score;
} DtVerdict;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null after a
 * successful call. Valid until the next call into this library on the same
 * thread.
 */
const char *dt_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *dt_version(void);

/**
 * Unbiased squared MMD between two sequences of `dim`-dimensional points
 * stored row-major, under a Gaussian RBF kernel.
 *
 * # Safety
 * `x` and `y` must point to `nx * dim` and `ny * dim` doubles; `out` must be
 * writable.
 */
enum DtStatus dt_mmd2_unbiased(const double *x,
                               size_t nx,
                               const double *y,
                               size_t ny,
                               size_t dim,
                               double bandwidth,
                               double *out_value);

/**
 * Two-sample Kolmogorov–Smirnov distance between scalar sequences.
 *
 * # Safety
 * `x` and `y` must point to `nx` and `ny` doubles; `out` must be writable.
 */
enum DtStatus dt_ks_distance(const double *x,
                             size_t nx,
                             const double *y,
                             size_t ny,
                             double *out_value);

/**
 * Chernoff information in nats between two isotropic Gaussians of
 * dimension `dim`.
 *
 * # Safety
 * `mean1` and `mean2` must point to `dim` doubles; `out` must be writable.
 */
enum DtStatus dt_chernoff_gaussian(const double *mean1,
                                   double variance1,
                                   const double *mean2,
                                   double variance2,
                                   size_t dim,
                                   double *out_value);

/**
 * New empty training set for points of dimension `dim`.
 *
 * # Safety
 * `out_handle` must be writable.
 */
enum DtStatus dt_training_new(size_t dim, struct DtTraining **out_handle);

/**
 * Appends a member sequence to cluster `cluster`. Clusters are created in
 * order: `cluster` may be an existing index or the next new one.
 *
 * # Safety
 * `handle` must come from `dt_training_new`; `data` must point to
 * `len * dim` doubles.
 */
enum DtStatus dt_training_add_member(struct DtTraining *handle,
                                     size_t cluster,
                                     const double *data,
                                     size_t len);

/**
 * # Safety
 * `handle` must be null or come from `dt_training_new`, and not be used again.
 */
void dt_training_free(struct DtTraining *handle);

/**
 * MMD nearest-member classification with a Gaussian RBF kernel.
 *
 * # Safety
 * `handle` must be a live training set; `y` must point to `len * dim`
 * doubles; `out_verdict` must be writable.
 */
enum DtStatus dt_classify_mmd(const struct DtTraining *handle,
                              const double *y,
                              size_t len,
                              double bandwidth,
                              struct DtVerdict *out_verdict);

/**
 * KS nearest-member classification. Scalar training sets only.
 *
 * # Safety
 * As for `dt_classify_mmd`.
 */
enum DtStatus dt_classify_ks(const struct DtTraining *handle,
                             const double *y,
                             size_t len,
                             struct DtVerdict *out_verdict);

/**
 * Parses an experiment config from TOML text.
 *
 * # Safety
 * `toml` must be a NUL-terminated string; `out_handle` must be writable.
 */
enum DtStatus dt_experiment_from_toml(const char *toml, struct DtExperiment **out_handle);

/**
 * Loads a bundled preset by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out_handle` must be writable.
 */
enum DtStatus dt_experiment_from_preset(const char *name, struct DtExperiment **out_handle);

/**
 * Overrides seed and trial count before running. A `trials` of 0 keeps the
 * configured value.
 *
 * # Safety
 * `handle` must be a live experiment.
 */
enum DtStatus dt_experiment_configure(struct DtExperiment *handle, uint64_t seed, size_t trials);

/**
 * Runs the Monte Carlo experiment on `workers` threads (0 for all cores).
 *
 * # Safety
 * `handle` must be a live experiment.
 */
enum DtStatus dt_experiment_run(struct DtExperiment *handle, size_t workers);

/**
 * Estimated error probability and Wilson half-width at test length `n`.
 *
 * # Safety
 * `handle` must be a live experiment; out-pointers must be writable.
 */
enum DtStatus dt_experiment_error(const struct DtExperiment *handle,
                                  enum DtTest test,
                                  size_t n,
                                  double *out_error,
                                  double *out_half_width);

/**
 * Fitted error exponent in bits per sample. `out_is_lower_bound` is set to
 * 1 when too few grid points had errors to regress.
 *
 * # Safety
 * `handle` must be a live experiment; out-pointers must be writable.
 */
enum DtStatus dt_experiment_exponent(const struct DtExperiment *handle,
                                     enum DtTest test,
                                     double *out_exponent,
                                     int32_t *out_is_lower_bound);

/**
 * Writes errors.csv (`which` = 0) or exponents.csv (`which` = 1) into `buf`
 * as a NUL-terminated string. `out_len` always receives the required size
 * including the terminator, so a call with `cap` 0 queries it.
 *
 * # Safety
 * `handle` must be a live experiment; `buf` must have `cap` writable bytes.
 */
enum DtStatus dt_experiment_csv(const struct DtExperiment *handle,
                                int32_t which,
                                char *buf,
                                size_t cap,
                                size_t *out_len);

/**
 * # Safety
 * `handle` must be null or a live experiment, and not be used again.
 */
void dt_experiment_free(struct DtExperiment *handle);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DISCTEST_H */
