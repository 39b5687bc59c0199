#ifndef AIRS_LAB_H
#define AIRS_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AirsStatus {
  AIRS_STATUS_OK = 0,
  AIRS_STATUS_NULL_POINTER = 1,
  AIRS_STATUS_INVALID_ARGUMENT = 2,
  AIRS_STATUS_INVALID_CONFIG = 3,
  AIRS_STATUS_IO = 4,
  AIRS_STATUS_PARSE = 5,
  AIRS_STATUS_INFEASIBLE = 6,
  AIRS_STATUS_GUARD_EXCEEDED = 7,
  AIRS_STATUS_NUMERICAL = 8,
  AIRS_STATUS_BUFFER_TOO_SMALL = 9,
  AIRS_STATUS_PANIC = 10,
} AirsStatus;

// Opaque scenario: scene, fading spec and UE sampler.
typedef struct AirsScenario AirsScenario;

// Opaque schedule.
typedef struct AirsSchedule AirsSchedule;

// Opaque SE matrix, one row per UE: BS-only column then one per AIRS.
typedef struct AirsSeMatrix AirsSeMatrix;

// SM-IB tuning; start from `airs_smib_params_default`.
typedef struct AirsSmIbParams {
  double eps;
  double xi;
  size_t n_max;
  uint64_t seed;
} AirsSmIbParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *airs_version(void);

// Copies this thread's last error message (empty after a success).
// Returns `AIRS_STATUS_BUFFER_TOO_SMALL` with `*needed` set if `cap` is
// too small.
//
// # Safety
// `buf` must be writable for `cap` bytes; `needed` may be null.
enum AirsStatus airs_last_error(char *buf, size_t cap, size_t *needed);

// Reads, parses and validates a scenario file.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be writable.
enum AirsStatus airs_scenario_load(const char *path, struct AirsScenario **out);

// Parses and validates a scenario document.
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum AirsStatus airs_scenario_parse(const char *json, struct AirsScenario **out);

// # Safety
// `sc` must come from this library and not be used afterwards; null is a
// no-op.
void airs_scenario_free(struct AirsScenario *sc);

// Scene dimensions: UEs listed in the scenario, AIRSs, slots, RBs. Any
// output pointer may be null.
//
// # Safety
// `sc` must be a live handle.
enum AirsStatus airs_scenario_dims(const struct AirsScenario *sc,
                                   size_t *n_ues,
                                   size_t *n_airs,
                                   size_t *n_slots,
                                   size_t *n_rb);

// Ergodic SE matrix of the scenario's UEs from the Monte Carlo oracle,
// with the scenario's fading spec re-seeded by `seed`.
//
// # Safety
// `sc` must be a live handle; `out` must be writable.
enum AirsStatus airs_se_matrix_predict(const struct AirsScenario *sc,
                                       uint64_t seed,
                                       struct AirsSeMatrix **out);

// Builds a matrix from `n_ues × n_cols` row-major values; `n_cols` is
// 1 + number of AIRSs.
//
// # Safety
// `data` must be readable for `n_ues * n_cols` doubles; `out` writable.
enum AirsStatus airs_se_matrix_new(const double *data,
                                   size_t n_ues,
                                   size_t n_cols,
                                   struct AirsSeMatrix **out);

// # Safety
// `m` must come from this library and not be used afterwards; null is a
// no-op.
void airs_se_matrix_free(struct AirsSeMatrix *m);

// # Safety
// `m` must be a live handle; output pointers may be null.
enum AirsStatus airs_se_matrix_dims(const struct AirsSeMatrix *m, size_t *n_ues, size_t *n_airs);

// SE of UE `ue` in column `col` (0 = BS only, `1 + i` = via AIRS `i`).
//
// # Safety
// `m` must be a live handle; `value` writable.
enum AirsStatus airs_se_matrix_get(const struct AirsSeMatrix *m,
                                   size_t ue,
                                   size_t col,
                                   double *value);

struct AirsSmIbParams airs_smib_params_default(void);

// Runs SM-IB. `params` may be null for the defaults.
//
// # Safety
// `m` must be a live handle; `params` null or valid; `out` writable.
enum AirsStatus airs_schedule_smib(const struct AirsSeMatrix *m,
                                   size_t n_slots,
                                   size_t n_rb,
                                   const struct AirsSmIbParams *params,
                                   struct AirsSchedule **out);

// Random association and ratios; the baseline for comparisons.
//
// # Safety
// `m` must be a live handle; `out` writable.
enum AirsStatus airs_schedule_random(const struct AirsSeMatrix *m,
                                     size_t n_slots,
                                     size_t n_rb,
                                     uint64_t seed,
                                     struct AirsSchedule **out);

// Exhaustive optimum. Refuses with `AIRS_STATUS_GUARD_EXCEEDED` before
// doing any work when the instance needs more than `guard` LP solves;
// pass a non-positive `guard` for the library default.
//
// # Safety
// `m` must be a live handle; `out` writable.
enum AirsStatus airs_schedule_exact(const struct AirsSeMatrix *m,
                                    size_t n_slots,
                                    size_t n_rb,
                                    double guard_lp,
                                    struct AirsSchedule **out);

// # Safety
// `s` must come from this library and not be used afterwards; null is a
// no-op.
void airs_schedule_free(struct AirsSchedule *s);

// # Safety
// `s` must be a live handle; `value` writable.
enum AirsStatus airs_schedule_min_throughput(const struct AirsSchedule *s, double *value);

// Per-UE throughput into `buf` (`cap` doubles); `*n_ues` gets the count.
//
// # Safety
// `s` must be a live handle; `buf` writable for `cap` doubles; `n_ues`
// may be null.
enum AirsStatus airs_schedule_throughputs(const struct AirsSchedule *s,
                                          double *buf,
                                          size_t cap,
                                          size_t *n_ues);

// Checks feasibility and the reported throughputs against `m`.
//
// # Safety
// Both handles must be live.
enum AirsStatus airs_schedule_validate(const struct AirsSchedule *s, const struct AirsSeMatrix *m);

// The schedule as JSON, same shape as the CLI writes. Size the buffer with
// a first call passing `buf = NULL`.
//
// # Safety
// `s` must be a live handle; `buf` writable for `cap` bytes; `needed` may
// be null.
enum AirsStatus airs_schedule_to_json(const struct AirsSchedule *s,
                                      char *buf,
                                      size_t cap,
                                      size_t *needed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AIRS_LAB_H */
