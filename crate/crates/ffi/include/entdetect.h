#ifndef ENTDETECT_H
#define ENTDETECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define ED_CRITERION_LOO 0

#define ED_CRITERION_POVM_CORR 1

#define ED_CRITERION_JOINT_PURITY 2

#define ED_CRITERION_JOINT_PURITY_FREE 3

#define ED_CRITERION_RESCALED 4

#define ED_CRITERION_NPT 5

typedef enum EdStatus {
  ED_STATUS_OK = 0,
  ED_STATUS_NULL_POINTER = 1,
  ED_STATUS_INVALID_ARGUMENT = 2,
  ED_STATUS_DIMENSION = 3,
  ED_STATUS_POSITIVITY = 4,
  ED_STATUS_NUMERIC = 5,
  ED_STATUS_PANIC = 6,
} EdStatus;

/**
 * An (N,M)-POVM.
 */
typedef struct EdPovm EdPovm;

/**
 * An unbounded hit-and-run chain.
 */
typedef struct EdSampler EdSampler;

/**
 * A bipartite density matrix.
 */
typedef struct EdState EdState;

typedef struct EdReport {
  double lhs;
  double rhs;
  double margin;
  bool detected;
} EdReport;

/**
 * `(N, M, x)` of one side's POVM.
 */
typedef struct EdPovmParams {
  uint32_t n;
  uint32_t m;
  double x;
} EdPovmParams;

typedef struct EdRatio {
  double ratio;
  double std_error;
  uint64_t n_samples;
  uint64_t n_detected;
} EdRatio;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. Valid until the
 * next failing call on the same thread.
 */
const char *ed_last_error_message(void);

/**
 * Builds the canonical `(N, M, x)` POVM on `C^d`. `o_prime` is either null
 * or a row-major orthogonal `(d²-1) × (d²-1)` matrix.
 *
 * # Safety
 * `o_prime` must be null or point to `(d²-1)²` doubles; `out` must be valid
 * for writes.
 */
enum EdStatus ed_povm_build(uint32_t d,
                            uint32_t n,
                            uint32_t m,
                            double x,
                            const double *o_prime,
                            struct EdPovm **out_povm);

/**
 * # Safety
 * `povm` must be null or a handle from [`ed_povm_build`] not yet freed.
 */
void ed_povm_free(struct EdPovm *povm);

/**
 * Number of elements `NM`, or 0 for a null handle.
 *
 * # Safety
 * `povm` must be null or a live handle.
 */
size_t ed_povm_num_elements(const struct EdPovm *povm);

/**
 * Copies element `index` (`α M + a`) into `out`, `2 d²` doubles.
 *
 * # Safety
 * `povm` must be a live handle and `out` must hold `2 d²` doubles.
 */
enum EdStatus ed_povm_element(const struct EdPovm *povm, size_t index, double *out);

/**
 * Validates and wraps a `(d_a d_b)²` density matrix.
 *
 * # Safety
 * `entries` must point to `2 (d_a d_b)²` doubles; `out_state` must be valid
 * for writes.
 */
enum EdStatus ed_state_new(uint32_t d_a,
                           uint32_t d_b,
                           const double *entries,
                           struct EdState **out_state);

/**
 * # Safety
 * `state` must be null or a live handle.
 */
void ed_state_free(struct EdState *state);

/**
 * Evaluates one criterion. The POVM handles are required for POVM_CORR,
 * JOINT_PURITY and JOINT_PURITY_FREE; RESCALED takes `x̃` from them when
 * given (SIC, `x̃ = 1`, otherwise); LOO and NPT ignore them.
 *
 * # Safety
 * Handles must be null or live; `out` must be valid for writes.
 */
enum EdStatus ed_evaluate(const struct EdState *state,
                          uint32_t criterion_id,
                          const struct EdPovm *povm_a,
                          const struct EdPovm *povm_b,
                          struct EdReport *out_report);

/**
 * Rescaled joint-probability criterion at `(x̃_A, x̃_B)`; the purity-dependent
 * bound when `purity_dependent` is set, the purity-free one otherwise.
 *
 * # Safety
 * `state` must be live; `out` must be valid for writes.
 */
enum EdStatus ed_rescaled(const struct EdState *state,
                          double x_tilde_a,
                          double x_tilde_b,
                          bool purity_dependent,
                          struct EdReport *out_report);

/**
 * Starts a chain at the maximally mixed state. Negative `burn_in` and
 * non-positive `thinning` select the defaults.
 *
 * # Safety
 * `out_sampler` must be valid for writes.
 */
enum EdStatus ed_sampler_new(uint32_t d_a,
                             uint32_t d_b,
                             uint64_t seed,
                             int64_t burn_in,
                             int64_t thinning,
                             struct EdSampler **out_sampler);

/**
 * Advances the chain and copies the next emitted state into `out`
 * (`2 (d_a d_b)²` doubles).
 *
 * # Safety
 * `sampler` must be live; `out` must hold `2 (d_a d_b)²` doubles.
 */
enum EdStatus ed_sampler_next(struct EdSampler *sampler, double *out);

/**
 * # Safety
 * `sampler` must be null or a live handle.
 */
void ed_sampler_free(struct EdSampler *sampler);

/**
 * Volume ratios of `n_criteria` criteria over one shared sample set, written
 * to `out[0..n_criteria]`. Null POVM parameters select the SIC of that side.
 *
 * # Safety
 * `criteria` must hold `n_criteria` ids and `out` room for as many results;
 * parameter pointers must be null or valid.
 */
enum EdStatus ed_estimate_ratios(uint32_t d_a,
                                 uint32_t d_b,
                                 uint64_t seed,
                                 uint64_t n_samples,
                                 int64_t burn_in,
                                 int64_t thinning,
                                 const uint32_t *criteria,
                                 size_t n_criteria,
                                 const struct EdPovmParams *povm_a,
                                 const struct EdPovmParams *povm_b,
                                 struct EdRatio *out_ratios);

/**
 * The admissible interval `(low, high]` of `x`.
 *
 * # Safety
 * Output pointers must be valid for writes.
 */
enum EdStatus ed_feasible_x_range(uint32_t d,
                                  uint32_t n,
                                  uint32_t m,
                                  double *out_low,
                                  double *out_high);

/**
 * Largest `x` at which the canonical frame yields a positive POVM.
 *
 * # Safety
 * `out_x` must be valid for writes.
 */
enum EdStatus ed_max_feasible_x(uint32_t d, uint32_t n, uint32_t m, double *out_x);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ENTDETECT_H */
