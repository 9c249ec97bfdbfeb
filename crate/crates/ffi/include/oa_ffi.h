#ifndef OA_FFI_H
#define OA_FFI_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum OaStatus {
  OA_STATUS_OK = 0,
  OA_STATUS_NULL_ARGUMENT = 1,
  OA_STATUS_INVALID_UTF8 = 2,
  OA_STATUS_PARSE = 3,
  OA_STATUS_INVALID_PROGRAM = 4,
  OA_STATUS_SIDECAR = 5,
  OA_STATUS_ENTRY_NOT_FOUND = 6,
  OA_STATUS_ANALYSIS = 7,
  OA_STATUS_INSUFFICIENT_PAIRS = 8,
  OA_STATUS_OUT_OF_RANGE = 9,
  OA_STATUS_PANIC = 10,
} OaStatus;

typedef enum OaMode {
  OA_MODE_NOPA = 0,
  OA_MODE_PA = 1,
  OA_MODE_HYBRID = 2,
} OaMode;

// Numbered like the command line exit codes.
typedef enum OaVerdict {
  OA_VERDICT_FALSE = 0,
  OA_VERDICT_TRUE = 1,
  OA_VERDICT_TIMEOUT = 2,
} OaVerdict;

typedef struct OaOutcome OaOutcome;

typedef struct OaProgram OaProgram;

// Analysis limits. `wall_clock_ms == 0` disables the wall clock.
typedef struct OaBudget {
  uint32_t depth;
  uint64_t fuel;
  uint64_t wall_clock_ms;
  uint32_t path_cap;
  bool early_exit;
} OaBudget;

// Undefined ratios are NaN.
typedef struct OaMetrics {
  double precision;
  double recall;
  double accuracy;
  double f1;
} OaMetrics;

typedef struct OaWilcoxon {
  double w;
  double p;
  size_t n;
  bool exact;
} OaWilcoxon;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *oa_last_error_message(void);

// # Safety
// `s` must be null or a string returned by this library, freed once.
void oa_string_free(char *s);

struct OaBudget oa_budget_default(void);

// Parses and validates `count` source files.
//
// # Safety
// `paths` and `texts` must point to `count` NUL-terminated strings each;
// `out` must be writable.
enum OaStatus oa_program_from_sources(const char *const *paths,
                                      const char *const *texts,
                                      size_t count,
                                      struct OaProgram **out);

// # Safety
// `p` must be null or a handle from `oa_program_from_sources`, freed once.
void oa_program_free(struct OaProgram *p);

// Replaces statement provenance with the markers from a JSON sidecar.
//
// # Safety
// `p` must be a live program handle and `json` a NUL-terminated string.
enum OaStatus oa_program_apply_sidecar(struct OaProgram *p, const char *json);

// Number of methods whose bodies hold both LEFT and RIGHT statements.
//
// # Safety
// `p` must be null or a live program handle.
size_t oa_program_entry_count(const struct OaProgram *p);

// # Safety
// `p` must be a live program handle and `out` writable.
enum OaStatus oa_program_entry_name(const struct OaProgram *p, size_t index, char **out);

// Runs one analysis from `entry` (`Class.method`). A null `budget` means
// the defaults.
//
// # Safety
// `p` must be a live program handle, `entry` a NUL-terminated string,
// `budget` null or readable, and `out` writable.
enum OaStatus oa_analyze(const struct OaProgram *p,
                         const char *entry,
                         enum OaMode mode,
                         const struct OaBudget *budget,
                         struct OaOutcome **out);

// # Safety
// `o` must be null or a handle from `oa_analyze`, freed once.
void oa_outcome_free(struct OaOutcome *o);

// A null handle reads as FALSE.
//
// # Safety
// `o` must be null or a live outcome handle.
enum OaVerdict oa_outcome_verdict(const struct OaOutcome *o);

// # Safety
// `o` must be null or a live outcome handle.
size_t oa_outcome_conflict_count(const struct OaOutcome *o);

// # Safety
// `o` must be null or a live outcome handle.
size_t oa_outcome_missref_count(const struct OaOutcome *o);

// # Safety
// `o` must be null or a live outcome handle.
uint64_t oa_outcome_visited(const struct OaOutcome *o);

// Human readable conflict reports, empty when there are none.
//
// # Safety
// `o` must be a live outcome handle and `out` writable.
enum OaStatus oa_outcome_report_text(const struct OaOutcome *o, char **out);

// The outcome as one JSON record line, newline included.
//
// # Safety
// `o` must be a live outcome handle and `out` writable.
enum OaStatus oa_outcome_record_json(const struct OaOutcome *o, bool virtual_clock, char **out);

// # Safety
// `out` must be writable.
enum OaStatus oa_metrics(uint64_t tp,
                         uint64_t fp,
                         uint64_t tn,
                         uint64_t fn_,
                         struct OaMetrics *out);

// Two-sided Wilcoxon signed-rank test on `n` paired samples.
//
// # Safety
// `a` and `b` must point to `n` doubles each; `out` must be writable.
enum OaStatus oa_wilcoxon(const double *a, const double *b, size_t n, struct OaWilcoxon *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OA_FFI_H */
