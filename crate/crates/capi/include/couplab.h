#ifndef COUPLAB_H
#define COUPLAB_H

/* Generated by cbindgen from couplab-capi; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Sentinel for unbounded budgets in [`CouplabRow`].
#define COUPLAB_BUDGET_UNBOUNDED -1

// Sentinel marking policy rows in [`CouplabRow`].
#define COUPLAB_BUDGET_POLICY_ROW -2

// Status codes returned by fallible calls.
typedef enum CouplabStatus {
  COUPLAB_STATUS_OK = 0,
  COUPLAB_STATUS_NULL_ARGUMENT = 1,
  COUPLAB_STATUS_INVALID_UTF8 = 2,
  COUPLAB_STATUS_CONFIG_ERROR = 3,
  COUPLAB_STATUS_SOLVER_ERROR = 4,
  COUPLAB_STATUS_IO_ERROR = 5,
  COUPLAB_STATUS_INDEX_OUT_OF_RANGE = 6,
} CouplabStatus;

// Opaque validated sweep configuration.
typedef struct CouplabConfig CouplabConfig;

// Opaque sweep result set.
typedef struct CouplabSweep CouplabSweep;

// One sweep row in C layout. Budget sentinels: -1 encodes the unbounded
// budget, -2 marks a policy row (budget columns empty).
typedef struct CouplabRow {
  int64_t n_f;
  int64_t n_s;
  uint64_t coupling_iters;
  uint64_t newton_f;
  uint64_t newton_s;
  uint64_t newton_total;
  double cost;
  uint8_t converged;
  double wall_s;
} CouplabRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Returns the message of the last error on this thread (borrowed; valid
// until the next failing call). Empty string when no error occurred yet.
const char *couplab_last_error(void);

// Library version as a static NUL-terminated string.
const char *couplab_version(void);

// Parses and validates a JSON configuration. Returns null on error.
//
// # Safety
// `json` must be a valid NUL-terminated string or null.
struct CouplabConfig *couplab_config_parse(const char *json);

// Loads and validates a JSON configuration file. Returns null on error.
//
// # Safety
// `path` must be a valid NUL-terminated string or null.
struct CouplabConfig *couplab_config_load(const char *path);

// Frees a configuration handle. Null is a no-op.
//
// # Safety
// `config` must have come from `couplab_config_parse`/`couplab_config_load`
// and must not be used afterwards.
void couplab_config_free(struct CouplabConfig *config);

// Runs the full sweep described by the config. Returns null on error; rows
// for stalled cells are flagged, not omitted, so a non-null result may still
// contain non-converged rows.
//
// # Safety
// `config` must be a live handle from this library or null.
struct CouplabSweep *couplab_sweep_run(const struct CouplabConfig *config);

// Frees a sweep handle. Null is a no-op.
//
// # Safety
// `sweep` must have come from `couplab_sweep_run` and must not be used
// afterwards.
void couplab_sweep_free(struct CouplabSweep *sweep);

// Number of rows in the sweep (grid cells first, then policies).
//
// # Safety
// `sweep` must be a live handle or null (returns 0).
size_t couplab_sweep_len(const struct CouplabSweep *sweep);

// Copies row `index` into `out`.
//
// # Safety
// `sweep` must be a live handle; `out` must point to writable memory for one
// `CouplabRow`.
enum CouplabStatus couplab_sweep_row(const struct CouplabSweep *sweep,
                                     size_t index,
                                     struct CouplabRow *out);

// Policy label of row `index` (empty string for fixed-budget cells).
// Borrowed; valid while the sweep handle lives. Null when out of range.
//
// # Safety
// `sweep` must be a live handle or null.
const char *couplab_sweep_row_policy(const struct CouplabSweep *sweep, size_t index);

// Writes the sweep as CSV (schema documented in the core crate).
//
// # Safety
// `sweep` must be a live handle; `path` a valid NUL-terminated string.
enum CouplabStatus couplab_sweep_write_csv(const struct CouplabSweep *sweep, const char *path);

// Renders the fixed-budget cells as an SVG heatmap.
// `metric` is one of "coupling", "newton", "cost".
//
// # Safety
// `sweep` must be a live handle; `metric` and `path` valid NUL-terminated
// strings.
enum CouplabStatus couplab_sweep_write_heatmap(const struct CouplabSweep *sweep,
                                               const char *metric,
                                               const char *path);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COUPLAB_H */
