#ifndef GPAC_H
#define GPAC_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum GpacInit {
  GPAC_INIT_KMEANSPP = 0,
  GPAC_INIT_RANDOM = 1,
  GPAC_INIT_ZERO = 2,
} GpacInit;

// Status codes returned by every fallible function.
typedef enum GpacStatus {
  GPAC_STATUS_OK = 0,
  // A required pointer argument was null.
  GPAC_STATUS_NULL_POINTER = 1,
  // A size or buffer length argument does not match.
  GPAC_STATUS_INVALID_ARGUMENT = 2,
  GPAC_STATUS_INVALID_DATASET = 3,
  GPAC_STATUS_INVALID_CONFIG = 4,
  // Graph construction or the optimizer produced a non-finite value.
  GPAC_STATUS_NUMERICAL = 5,
  // A Rust panic was caught at the boundary.
  GPAC_STATUS_INTERNAL = 6,
} GpacStatus;

// Opaque dataset handle.
typedef struct GpacDataset GpacDataset;

// Opaque fit result handle.
typedef struct GpacResult GpacResult;

// Hyperparameters. Start from `gpac_params_default`.
typedef struct GpacParams {
  size_t clusters;
  double m;
  double alpha;
  double beta_max;
  size_t beta_ramp_epochs;
  size_t k;
  // 0 selects the default depth.
  size_t theta;
  // Values <= 0 select the default bandwidth.
  double sigma;
  size_t batch_size;
  size_t max_epochs;
  double convergence_tol;
  uint64_t seed;
  enum GpacInit init;
} GpacParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Default hyperparameters for `clusters` clusters.
struct GpacParams gpac_params_default(size_t clusters);

// Copies `n * d` row-major features (and `n` labels, which may be null)
// into a new dataset stored in `*out`.
//
// # Safety
// `features` must point to `n * d` doubles, `labels` to `n` integers or be
// null, and `out` must be writable.
enum GpacStatus gpac_dataset_new(const double *features,
                                 size_t n,
                                 size_t d,
                                 const int64_t *labels,
                                 struct GpacDataset **out);

// # Safety
// `ds` must come from `gpac_dataset_new` and not be freed twice. Null is ignored.
void gpac_dataset_free(struct GpacDataset *ds);

// Clusters `ds` and stores a new result handle in `*out`.
//
// # Safety
// `ds` must be a live dataset handle, `params` a valid pointer and `out` writable.
enum GpacStatus gpac_fit(const struct GpacDataset *ds,
                         const struct GpacParams *params,
                         struct GpacResult **out);

// Number of samples, or 0 for a null handle.
//
// # Safety
// `res` must be null or a live result handle.
size_t gpac_result_n(const struct GpacResult *res);

// Number of clusters, or 0 for a null handle.
//
// # Safety
// `res` must be null or a live result handle.
size_t gpac_result_clusters(const struct GpacResult *res);

// Number of epochs run, or 0 for a null handle.
//
// # Safety
// `res` must be null or a live result handle.
size_t gpac_result_epochs(const struct GpacResult *res);

// Copies the predicted cluster of each sample into `out[0..len]`; `len`
// must equal the sample count.
//
// # Safety
// `res` must be a live result handle and `out` must hold `len` entries.
enum GpacStatus gpac_result_labels(const struct GpacResult *res, size_t *out, size_t len);

// Copies the row-major `n * c` membership matrix into `out[0..len]`.
//
// # Safety
// `res` must be a live result handle and `out` must hold `len` entries.
enum GpacStatus gpac_result_probs(const struct GpacResult *res, double *out, size_t len);

// # Safety
// `res` must come from `gpac_fit` and not be freed twice. Null is ignored.
void gpac_result_free(struct GpacResult *res);

// Normalized mutual information (arithmetic normalization).
//
// # Safety
// `pred` and `truth` must hold `n` entries and `out` must be writable.
enum GpacStatus gpac_nmi(const int64_t *pred, const int64_t *truth, size_t n, double *out);

// Clustering accuracy under the best one-to-one label matching.
//
// # Safety
// `pred` and `truth` must hold `n` entries and `out` must be writable.
enum GpacStatus gpac_acc(const int64_t *pred, const int64_t *truth, size_t n, double *out);

// Adjusted Rand index.
//
// # Safety
// `pred` and `truth` must hold `n` entries and `out` must be writable.
enum GpacStatus gpac_ari(const int64_t *pred, const int64_t *truth, size_t n, double *out);

// Message for the last failure on this thread, or an empty string. The
// pointer stays valid until the next failing call on the same thread.
const char *gpac_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *gpac_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPAC_H */
