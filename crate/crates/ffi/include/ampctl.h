#ifndef AMPCTL_H
#define AMPCTL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AmpStatus {
  AMP_STATUS_OK = 0,
  /*
   A required pointer was null.
   */
  AMP_STATUS_NULL = 1,
  AMP_STATUS_INVALID_ARGUMENT = 2,
  /*
   Config could not be parsed, resolved, or validated.
   */
  AMP_STATUS_CONFIG = 3,
  /*
   A computation produced or received a non-finite value.
   */
  AMP_STATUS_NON_FINITE = 4,
  AMP_STATUS_IO = 5,
  AMP_STATUS_PANIC = 6,
} AmpStatus;

/*
 Dictionary of periodic atoms.
 */
typedef struct AmpDictionary AmpDictionary;

/*
 Online identifier bound to a dictionary.
 */
typedef struct AmpIdentifier AmpIdentifier;

/*
 A finished closed-loop run.
 */
typedef struct AmpRun AmpRun;

typedef struct AmpUpdate {
  double error_before;
  size_t selected_index;
  double correlation;
  bool applied;
} AmpUpdate;

typedef struct AmpTraceRow {
  size_t k;
  double t;
  double r;
  double ym;
  double y;
  double u;
  double f_true;
  double f_hat;
  double eta;
  double e;
  /*
   -1 when no atom was selected.
   */
  int64_t selected_index;
  double a;
  bool applied;
} AmpTraceRow;

typedef struct AmpMetrics {
  double tracking_rmse;
  double identification_rmse;
  double max_abs_u;
  double max_abs_y;
  double window_start;
  size_t window_rows;
} AmpMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message of the most recent failure on this thread, or null if none.
 The pointer stays valid until the next failing call on the same thread.
 */
const char *amp_last_error(void);

/*
 Library version as a static NUL-terminated string.
 */
const char *amp_version(void);

/*
 Expands `n` poles (`re[i] + im[i] i`) into `out_s[0..n]`, the coefficients
 of `y_m(k) = sum s_i y_m(k-i) + r(k)`.

 # Safety
 `re`, `im` and `out_s` must each point to `n` valid doubles.
 */
enum AmpStatus amp_poles_to_coefficients(const double *re,
                                         const double *im,
                                         size_t n,
                                         double *out_s);

/*
 Builds a dictionary from a JSON dictionary spec (the `dictionary` section
 of a run config) for a regressor of `regressor_dim` entries.

 # Safety
 `spec_json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum AmpStatus amp_dictionary_new(const char *spec_json,
                                  size_t regressor_dim,
                                  struct AmpDictionary **out);

/*
 Number of atoms.

 # Safety
 `dict` must be a live handle; `out_len` a valid pointer.
 */
enum AmpStatus amp_dictionary_len(const struct AmpDictionary *dict, size_t *out_len);

/*
 Evaluates every atom at the scalar `x` into `out[0..len]`.

 # Safety
 `dict` must be a live handle; `out` must hold `len` doubles.
 */
enum AmpStatus amp_dictionary_eval(const struct AmpDictionary *dict,
                                   double x,
                                   double *out,
                                   size_t len);

/*
 # Safety
 `dict` must be null or a handle from [`amp_dictionary_new`] not yet freed.
 */
void amp_dictionary_free(struct AmpDictionary *dict);

/*
 Creates an identifier with zero coefficients. `safeguard` is 0 for clamp,
 1 for skip. The identifier keeps its own reference to the dictionary.

 # Safety
 `dict` must be a live handle; `out` a valid pointer.
 */
enum AmpStatus amp_identifier_new(const struct AmpDictionary *dict,
                                  size_t p,
                                  size_t q,
                                  double epsilon,
                                  int32_t safeguard,
                                  struct AmpIdentifier **out);

/*
 Current estimate `f_hat` at the regressor `reg[0..len]`.

 # Safety
 `id` must be a live handle; `reg` must hold `len` doubles; `out` valid.
 */
enum AmpStatus amp_identifier_predict(const struct AmpIdentifier *id,
                                      const double *reg,
                                      size_t len,
                                      double *out);

/*
 One adaptive update towards the target `y`. `out` may be null.

 # Safety
 `id` must be a live handle; `reg` must hold `len` doubles.
 */
enum AmpStatus amp_identifier_update(struct AmpIdentifier *id,
                                     const double *reg,
                                     size_t len,
                                     double y,
                                     struct AmpUpdate *out);

/*
 Copies the coefficient vector into `out[0..len]`; `len` must be at least
 the dictionary size.

 # Safety
 `id` must be a live handle; `out` must hold `len` doubles.
 */
enum AmpStatus amp_identifier_theta(const struct AmpIdentifier *id, double *out, size_t len);

/*
 # Safety
 `id` must be null or a handle from [`amp_identifier_new`] not yet freed.
 */
void amp_identifier_free(struct AmpIdentifier *id);

/*
 Runs built-in example 1 or 2 with its default config.

 # Safety
 `out` must be a valid pointer.
 */
enum AmpStatus amp_run_example(int32_t which, struct AmpRun **out);

/*
 Runs a config given as JSON, merged over the defaults of its
 `plant.kind` exactly as the CLI's `custom` command does.

 # Safety
 `config_json` must be a NUL-terminated string; `out` a valid pointer.
 */
enum AmpStatus amp_run_from_json(const char *config_json, struct AmpRun **out);

/*
 Number of trace rows.

 # Safety
 `run` must be a live handle; `out_len` a valid pointer.
 */
enum AmpStatus amp_run_len(const struct AmpRun *run, size_t *out_len);

/*
 Copies trace row `index`.

 # Safety
 `run` must be a live handle; `out` a valid pointer.
 */
enum AmpStatus amp_run_row(const struct AmpRun *run, size_t index, struct AmpTraceRow *out);

/*
 # Safety
 `run` must be a live handle; `out` a valid pointer.
 */
enum AmpStatus amp_run_metrics(const struct AmpRun *run, struct AmpMetrics *out);

/*
 Writes the trace as CSV (same format as the CLI's `trace.csv`).

 # Safety
 `run` must be a live handle; `path` a NUL-terminated string.
 */
enum AmpStatus amp_run_write_csv(const struct AmpRun *run, const char *path);

/*
 # Safety
 `run` must be null or a handle from an `amp_run_*` constructor not yet freed.
 */
void amp_run_free(struct AmpRun *run);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AMPCTL_H */
