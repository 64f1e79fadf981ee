#ifndef HOM_METROLOGY_H
#define HOM_METROLOGY_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status code returned by every fallible call.
 */
typedef enum HomStatus {
  HOM_STATUS_OK = 0,
  HOM_STATUS_NULL_POINTER = 1,
  HOM_STATUS_INVALID_PARAMETER = 2,
  HOM_STATUS_GRID = 3,
  HOM_STATUS_NOT_NORMALIZED = 4,
  HOM_STATUS_UNSUPPORTED = 5,
  HOM_STATUS_OUT_OF_RANGE = 6,
  HOM_STATUS_DEGENERATE = 7,
  HOM_STATUS_ZERO_INFORMATION = 8,
  HOM_STATUS_NON_CONVERGENCE = 9,
  HOM_STATUS_PARSE = 10,
  HOM_STATUS_IO = 11,
  HOM_STATUS_PANIC = 12,
} HomStatus;

/**
 * Opaque state handle.
 */
typedef struct HomState HomState;

typedef struct HomMoments {
  double mean;
  double variance;
  double temporal_variance;
  double phase_space_area;
} HomMoments;

typedef struct HomCutPoint {
  double w;
  double w1;
  double w2;
} HomCutPoint;

typedef struct HomFisherMax {
  double tau_m;
  double f_tilde;
  /**
   * Non-zero when the value is the unit-visibility limit at τ = 0.
   */
  int32_t limit;
} HomFisherMax;

typedef struct HomCrb {
  double crb;
  double quantum_bound;
  double fisher;
} HomCrb;

typedef struct HomEstimate {
  double tau_hat;
  double bias;
  double empirical_std;
  double crb;
  double ratio_to_crb;
  uint64_t clipped;
} HomEstimate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *hom_version(void);

/**
 * Copy the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL,
 * or 0 when there is no pending error.
 *
 * # Safety
 * `buf` must be NULL or valid for `len` bytes of writes.
 */
size_t hom_last_error_message(char *buf, size_t len);

/**
 * Gaussian state with intensity standard deviation `sigma` (rad/ps).
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HomStatus hom_state_gauss(double sigma, struct HomState **out);

/**
 * Flat spectrum of full width `delta_omega` (rad/ps).
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HomStatus hom_state_rect(double delta_omega, struct HomState **out);

/**
 * Two flat blocks of width `delta_omega_prime` at `±omega_prime` (rad/ps).
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HomStatus hom_state_cat(double omega_prime, double delta_omega_prime, struct HomState **out);

/**
 * Two-block state from filter channels given in nm.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HomStatus hom_state_cat_from_channels(double lambda_a_nm,
                                           double lambda_b_nm,
                                           double width_nm,
                                           double lambda_ref_nm,
                                           struct HomState **out);

/**
 * Phase-matching state `sinc(a ω² + b ω + c)`.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HomStatus hom_state_sinc_pm(double a, double b, double c, struct HomState **out);

/**
 * Tabulated amplitude on a uniform grid symmetric about zero; normalized on ingest.
 *
 * # Safety
 * `omega`, `re` and `im` must each be valid for `len` reads; `out` for a pointer write.
 */
enum HomStatus hom_state_tabulated(const double *omega,
                                   const double *re,
                                   const double *im,
                                   size_t len,
                                   struct HomState **out);

/**
 * Reference cut `cos(√(2a) τ)`; has no spectral amplitude.
 *
 * # Safety
 * `out` must be valid for a pointer write.
 */
enum HomStatus hom_state_cosine(double a, struct HomState **out);

/**
 * Release a handle. NULL is ignored.
 *
 * # Safety
 * `state` must be NULL or a handle not yet freed.
 */
void hom_state_free(struct HomState *state);

/**
 * Spectral moments of the sampled amplitude.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for a write.
 */
enum HomStatus hom_state_moments(const struct HomState *state, struct HomMoments *out);

/**
 * Quantum Fisher information (ps⁻²) for the correlated configuration.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for a write.
 */
enum HomStatus hom_state_qfi(const struct HomState *state, double *out);

/**
 * Wigner cut and its first two delay derivatives at `tau` (ps).
 *
 * # Safety
 * `state` must be a live handle; `out` valid for a write.
 */
enum HomStatus hom_cut_eval(const struct HomState *state, double tau, struct HomCutPoint *out);

/**
 * Coincidence probability at visibility `v` and delay `tau`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for a write.
 */
enum HomStatus hom_coincidence_probability(const struct HomState *state,
                                           double v,
                                           double tau,
                                           double *out);

/**
 * Fisher information (ps⁻²) at visibility `v` and delay `tau`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for a write.
 */
enum HomStatus hom_fisher_information(const struct HomState *state,
                                      double v,
                                      double tau,
                                      double *out);

/**
 * Delay and value of the maximal Fisher information at visibility `v`.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for a write.
 */
enum HomStatus hom_max_fisher(const struct HomState *state, double v, struct HomFisherMax *out);

/**
 * `F̃_V / ℱ` for each of the `len` visibilities in `v`, written to `ratios`.
 *
 * # Safety
 * `state` must be a live handle; `v` valid for `len` reads and `ratios` for `len` writes.
 */
enum HomStatus hom_ratio_curve(const struct HomState *state,
                               const double *v,
                               size_t len,
                               double *ratios);

/**
 * Classical and quantum Cramér-Rao bounds (ps) for `trials` pairs.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for a write.
 */
enum HomStatus hom_crb(const struct HomState *state,
                       double v,
                       double tau,
                       uint64_t trials,
                       struct HomCrb *out);

/**
 * Seeded Monte Carlo study of the single-delay estimator.
 *
 * # Safety
 * `state` must be a live handle; `out` valid for a write.
 */
enum HomStatus hom_mc_crb_study(const struct HomState *state,
                                double v,
                                double tau_true,
                                uint64_t trials,
                                uint64_t replicates,
                                uint64_t seed,
                                struct HomEstimate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HOM_METROLOGY_H */
