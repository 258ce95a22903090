#ifndef RISKCBR_H
#define RISKCBR_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RcbRationale {
  RCB_RATIONALE_GENERAL = 0,
  RCB_RATIONALE_PERSONAL_EXACT = 1,
  RCB_RATIONALE_PERSONAL_MANEUVER = 2,
} RcbRationale;

typedef enum RcbStatus {
  RCB_STATUS_OK = 0,
  RCB_STATUS_NULL_ARGUMENT = 1,
  RCB_STATUS_INVALID_ARGUMENT = 2,
  RCB_STATUS_IO = 3,
  RCB_STATUS_PARSE = 4,
  RCB_STATUS_CORRUPT_FILE = 5,
  RCB_STATUS_VERSION_MISMATCH = 6,
  RCB_STATUS_MISSING_ARTIFACT = 7,
  RCB_STATUS_EMPTY_CASE_BASE = 8,
  RCB_STATUS_NO_VIABLE_SOLUTION = 9,
  RCB_STATUS_INTERNAL = 10,
} RcbStatus;

typedef struct RcbCaseBase RcbCaseBase;

// Trained model plus its similarity tables.
typedef struct RcbModel RcbModel;

// Result of [`rcb_recommend`].
typedef struct RcbRecommendation {
  uint8_t d_r;
  uint8_t c_t;
  double confidence;
  uint64_t support;
  enum RcbRationale rationale;
  uint64_t general_count;
  uint64_t personalized_count;
} RcbRecommendation;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on this thread.
const char *rcb_last_error(void);

// Library version, a static NUL-terminated string.
const char *rcb_version(void);

// Loads a model file into `*out`.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a valid pointer.
enum RcbStatus rcb_model_load(const char *path, struct RcbModel **out);

// # Safety
// `model` must come from [`rcb_model_load`] and not be used afterwards.
void rcb_model_free(struct RcbModel *model);

// Crash probability of the case `codes[0..7]` in the order
// `e_n, p_e, p_m, d_r, c_t, r_c, d_c`.
//
// # Safety
// `codes` must point to 7 bytes; `out_prob` must be valid.
enum RcbStatus rcb_model_predict(const struct RcbModel *model,
                                 const uint8_t *codes,
                                 double *out_prob);

// Builds the near-crash case base from the model.
//
// # Safety
// `model` must be a live handle; `out` a valid pointer.
enum RcbStatus rcb_casebase_build(const struct RcbModel *model, struct RcbCaseBase **out);

// Loads a case-base CSV using the model's schema.
//
// # Safety
// `model` must be a live handle, `path` NUL-terminated, `out` valid.
enum RcbStatus rcb_casebase_load(const struct RcbModel *model,
                                 const char *path,
                                 struct RcbCaseBase **out);

// # Safety
// `cb` must be a live handle and `path` NUL-terminated.
enum RcbStatus rcb_casebase_save(const struct RcbCaseBase *cb, const char *path);

// Number of `(premise, solution)` pairs.
//
// # Safety
// `cb` must be a live handle; `out_count` valid.
enum RcbStatus rcb_casebase_count(const struct RcbCaseBase *cb, uint64_t *out_count);

// # Safety
// `cb` must come from a build or load call and not be used afterwards.
void rcb_casebase_free(struct RcbCaseBase *cb);

// Retrieve, reuse and revise for `premise[0..5]` (`e_n, p_e, p_m, r_c, d_c`).
//
// `personal_dir` and `driver_id` may both be null for an anonymous query.
// `excluded` holds `n_excluded` maneuver codes and may be null when
// `n_excluded` is 0.
//
// # Safety
// Pointers must be valid for the lengths described above.
enum RcbStatus rcb_recommend(const struct RcbModel *model,
                             const struct RcbCaseBase *cb,
                             const uint8_t *premise,
                             const char *personal_dir,
                             const char *driver_id,
                             const uint8_t *excluded,
                             uintptr_t n_excluded,
                             double tau,
                             uintptr_t top_k,
                             struct RcbRecommendation *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RISKCBR_H */
