#ifndef FLOWSENTRY_H
#define FLOWSENTRY_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FsStatus {
  FS_OK = 0,
  FS_ERR_NULL_POINTER = 1,
  FS_ERR_IO = 2,
  FS_ERR_ARTIFACT = 3,
  FS_ERR_DIMENSION = 4,
  FS_ERR_INVALID_ARGUMENT = 5,
  // The run does not contain the requested stage.
  FS_ERR_MISSING_STAGE = 6,
  FS_ERR_PANIC = 7,
} FsStatus;

typedef enum FsVoting {
  FS_VOTING_MAJORITY = 0,
  FS_VOTING_WEIGHTED = 1,
} FsVoting;

// Opaque handle to a loaded run.
typedef struct FsRun FsRun;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next call on the same thread.
const char *fs_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *fs_version(void);

// Load a run artifact (`run.json`). On success `*out` owns a handle.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum FsStatus fs_run_load(const char *path, struct FsRun **out);

// Release a handle. NULL is ignored.
//
// # Safety
// `run` must come from [`fs_run_load`] and not be used afterwards.
void fs_run_free(struct FsRun *run);

// Number of input features expected per row.
//
// # Safety
// `run` must be a live handle and `out` a valid pointer.
enum FsStatus fs_run_input_dim(const struct FsRun *run, size_t *out);

// Ensemble labels (0 benign, 1 attack) and attack vote shares for `n_rows`
// rows. `mode` is an [`FsVoting`] value; `out_scores` may be NULL.
//
// # Safety
// `rows_ptr` holds `n_rows * n_cols` doubles; `out_labels` and `out_scores`
// (when not NULL) hold `n_rows` elements.
enum FsStatus fs_run_predict_ensemble(const struct FsRun *run,
                                      const double *rows_ptr,
                                      size_t n_rows,
                                      size_t n_cols,
                                      uint32_t mode,
                                      uint8_t *out_labels,
                                      double *out_scores);

// Final labels from the refinement forest and its attack probabilities.
//
// # Safety
// Same buffer contract as [`fs_run_predict_ensemble`].
enum FsStatus fs_run_predict_final(const struct FsRun *run,
                                   const double *rows_ptr,
                                   size_t n_rows,
                                   size_t n_cols,
                                   uint8_t *out_labels,
                                   double *out_scores);

// Weighted vote over `n` learner votes (0 or 1). Attack wins only on a
// strictly larger weight sum.
//
// # Safety
// `weights` and `votes` hold `n` elements; the outputs are valid pointers
// (the score pointers may be NULL).
enum FsStatus fs_weighted_vote(const double *weights,
                               const uint8_t *votes,
                               size_t n,
                               uint8_t *out_label,
                               double *out_score_benign,
                               double *out_score_attack);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOWSENTRY_H */
