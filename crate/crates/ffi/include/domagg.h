#ifndef DOMAGG_H
#define DOMAGG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum DomaggApproach {
  DOMAGG_APPROACH_WR = 0,
  DOMAGG_APPROACH_MA1 = 1,
  DOMAGG_APPROACH_MA2 = 2,
  DOMAGG_APPROACH_SAA = 3,
} DomaggApproach;

typedef enum DomaggOrder {
  DOMAGG_ORDER_FSD = 1,
  DOMAGG_ORDER_SSD = 2,
} DomaggOrder;

typedef enum DomaggStatus {
  DOMAGG_STATUS_OK = 0,
  DOMAGG_STATUS_NULL_POINTER = 1,
  DOMAGG_STATUS_INVALID_ARGUMENT = 2,
  DOMAGG_STATUS_INFEASIBLE = 3,
  DOMAGG_STATUS_NUMERIC = 4,
  DOMAGG_STATUS_UNBOUNDED = 5,
  DOMAGG_STATUS_UNSUPPORTED = 6,
  DOMAGG_STATUS_IO = 7,
  DOMAGG_STATUS_PARSE = 8,
  DOMAGG_STATUS_BUFFER_TOO_SMALL = 9,
  DOMAGG_STATUS_PANIC = 10,
} DomaggStatus;

/**
 * A univariate loss law.
 */
typedef struct DomaggDistribution DomaggDistribution;

/**
 * A law-invariant risk measure.
 */
typedef struct DomaggMeasure DomaggMeasure;

/**
 * A robust optimization instance.
 */
typedef struct DomaggProgram DomaggProgram;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread. Valid until the next
 * failing call on the same thread.
 */
const char *domagg_last_error(void);

/**
 * Library version as a static string.
 */
const char *domagg_version(void);

/**
 * Atomic law from `n` locations and probabilities.
 *
 * # Safety
 * `locations` and `probabilities` must point to `n` doubles; `out` must be
 * writable.
 */
enum DomaggStatus domagg_distribution_atoms(const double *locations,
                                            const double *probabilities,
                                            uintptr_t n,
                                            struct DomaggDistribution **out);

/**
 * Law from a spec string (`normal:mu:sigma`, `t:nu:loc:scale`,
 * `logistic:loc:s`, `point:x`) or the path of a JSON/CSV file.
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum DomaggStatus domagg_distribution_parse(const char *spec, struct DomaggDistribution **out);

/**
 * Law from its JSON form.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DomaggStatus domagg_distribution_from_json(const char *json, struct DomaggDistribution **out);

/**
 * JSON form of a law; release with [`domagg_string_free`].
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum DomaggStatus domagg_distribution_to_json(const struct DomaggDistribution *d, char **out);

/**
 * # Safety
 * `d` must come from this library and not be used afterwards.
 */
void domagg_distribution_free(struct DomaggDistribution *d);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void domagg_string_free(char *s);

/**
 * `F(x)`.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum DomaggStatus domagg_distribution_cdf(const struct DomaggDistribution *d,
                                          double x,
                                          double *out);

/**
 * Left quantile at level `alpha`.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum DomaggStatus domagg_distribution_quantile(const struct DomaggDistribution *d,
                                               double alpha,
                                               double *out);

/**
 * `π(x) = E[(X - x)₊]`.
 *
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum DomaggStatus domagg_distribution_pi(const struct DomaggDistribution *d, double x, double *out);

/**
 * # Safety
 * `d` must be a live handle; `out` must be writable.
 */
enum DomaggStatus domagg_distribution_mean(const struct DomaggDistribution *d, double *out);

/**
 * Supremum of `n` laws under the given order. `grid` sets the
 * discretization of non-atomic laws (0 for the default).
 *
 * # Safety
 * `set` must point to `n` live handles; `out` must be writable.
 */
enum DomaggStatus domagg_supremum(enum DomaggOrder order,
                                  const struct DomaggDistribution *const *set,
                                  uintptr_t n,
                                  uintptr_t grid,
                                  struct DomaggDistribution **out);

/**
 * SSD supremum of the order-`p` Wasserstein ball of radius `eps`.
 *
 * # Safety
 * `benchmark` must be a live handle; `out` must be writable.
 */
enum DomaggStatus domagg_wasserstein_sup_ssd(const struct DomaggDistribution *benchmark,
                                             double p,
                                             double eps,
                                             struct DomaggDistribution **out);

/**
 * Risk measure from a spec (`var:a`, `es:a`, `rvar:a:b`, `pd:k`,
 * `expectile:a`, `mean`, `kusuoka:@file.json`).
 *
 * # Safety
 * `spec` must be a NUL-terminated string; `out` must be writable.
 */
enum DomaggStatus domagg_measure_parse(const char *spec, struct DomaggMeasure **out);

/**
 * # Safety
 * `m` must come from this library and not be used afterwards.
 */
void domagg_measure_free(struct DomaggMeasure *m);

/**
 * `ρ(F)`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum DomaggStatus domagg_measure_evaluate(const struct DomaggMeasure *m,
                                          const struct DomaggDistribution *d,
                                          double *out);

/**
 * Worst-case value `max_F ρ(F)` over `n` laws.
 *
 * # Safety
 * `set` must point to `n` live handles; `out` must be writable.
 */
enum DomaggStatus domagg_wr_value(const struct DomaggMeasure *m,
                                  const struct DomaggDistribution *const *set,
                                  uintptr_t n,
                                  double *out);

/**
 * Aggregated value `ρ(⋁ F)` under the given order.
 *
 * # Safety
 * `set` must point to `n` live handles; `out` must be writable.
 */
enum DomaggStatus domagg_ma_value(const struct DomaggMeasure *m,
                                  enum DomaggOrder order,
                                  const struct DomaggDistribution *const *set,
                                  uintptr_t n,
                                  double *out);

/**
 * Program from its JSON description.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum DomaggStatus domagg_program_from_json(const char *json, struct DomaggProgram **out);

/**
 * # Safety
 * `p` must come from this library and not be used afterwards.
 */
void domagg_program_free(struct DomaggProgram *p);

/**
 * Solves the program. The optimal action is written to `action` (capacity
 * `capacity`), its length to `action_len`. With too small a buffer the
 * call fails with `BUFFER_TOO_SMALL` and `action_len` holds the size
 * needed.
 *
 * # Safety
 * `p` must be a live handle; `action` must have room for `capacity`
 * doubles; `objective` and `action_len` must be writable.
 */
enum DomaggStatus domagg_program_solve(const struct DomaggProgram *p,
                                       enum DomaggApproach approach,
                                       double *objective,
                                       double *action,
                                       uintptr_t capacity,
                                       uintptr_t *action_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DOMAGG_H */
