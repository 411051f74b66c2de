#ifndef NLREG_H
#define NLREG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every call. Values 2–4 match the `nlreg` exit codes.
 */
typedef enum NlregStatus {
  NLREG_STATUS_OK = 0,
  NLREG_STATUS_NULL_POINTER = 1,
  NLREG_STATUS_INVALID_INPUT = 2,
  NLREG_STATUS_UNSUPPORTED = 3,
  NLREG_STATUS_NUMERICAL = 4,
  NLREG_STATUS_PANIC = 5,
} NlregStatus;

typedef enum NlregQuantity {
  /**
   * ∫_{r<|z|<R} j.
   */
  NLREG_QUANTITY_ANNULUS = 0,
  /**
   * ∫_{|z|<r} |z| j.
   */
  NLREG_QUANTITY_FIRST_MOMENT = 1,
  /**
   * L(r) = m(r)/r + ∫_{|z|>r} j.
   */
  NLREG_QUANTITY_TOTAL = 2,
} NlregQuantity;

/**
 * Opaque kernel handle.
 */
typedef struct NlregKernel NlregKernel;

/**
 * Opaque discrete solution handle.
 */
typedef struct NlregSolution NlregSolution;

/**
 * Condition verdicts in the order A1, A2, A3_1, A3_2, Kas, B:
 * 1 pass, 0 fail, -1 inconclusive.
 */
typedef struct NlregConditions {
  int32_t verdicts[6];
  /**
   * Decay exponent α estimated for condition (B); NaN if unavailable.
   */
  double alpha;
} NlregConditions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t nlreg_last_error(char *buf, size_t cap);

/**
 * Library version as a static NUL-terminated string.
 */
const char *nlreg_version(void);

/**
 * Builds a kernel from a TOML table such as
 * `family = { kind = "fractional", s = 0.25 }`. `rel_tol ≤ 0` keeps the default tolerance.
 *
 * # Safety
 * `toml` must be a NUL-terminated UTF-8 string; `out` must be writable.
 */
enum NlregStatus nlreg_kernel_from_toml(const char *toml, double rel_tol, struct NlregKernel **out);

/**
 * Releases a kernel; null is ignored.
 *
 * # Safety
 * `k` must come from [`nlreg_kernel_from_toml`] and not be used afterwards.
 */
void nlreg_kernel_free(struct NlregKernel *k);

/**
 * Evaluates j(z) at one point of dimension `dim` (which must match the kernel).
 *
 * # Safety
 * `z` must point to `dim` doubles and `out` must be writable.
 */
enum NlregStatus nlreg_kernel_density(const struct NlregKernel *k,
                                      const double *z,
                                      size_t dim,
                                      double *out);

/**
 * Integral quantity of the density; `big_r` is used only for `Annulus` and may be +∞.
 *
 * # Safety
 * `k` must be a live kernel handle and `value` writable.
 */
enum NlregStatus nlreg_quantity(const struct NlregKernel *k,
                                enum NlregQuantity q,
                                double r,
                                double big_r,
                                double *value);

/**
 * Runs the condition checks with scale `r0` and sampling `seed`.
 *
 * # Safety
 * `k` must be a live kernel handle and `out` writable.
 */
enum NlregStatus nlreg_check_conditions(const struct NlregKernel *k,
                                        double r0,
                                        uint64_t seed,
                                        struct NlregConditions *out);

/**
 * Solves ℒu − W u = f in (a, b) with u = g outside, for constant f, g and W,
 * on a uniform mesh of width `h` extended by `collar`.
 *
 * # Safety
 * `k` must be a live kernel handle and `out` writable.
 */
enum NlregStatus nlreg_solve_constant(const struct NlregKernel *k,
                                      double a,
                                      double b,
                                      double collar,
                                      double h,
                                      double f,
                                      double g,
                                      double w,
                                      struct NlregSolution **out);

/**
 * Number of mesh nodes in the solution (0 for null).
 *
 * # Safety
 * `s` must be null or a live solution handle.
 */
size_t nlreg_solution_len(const struct NlregSolution *s);

/**
 * Copies node coordinates and values into `x` and `u` (either may be null).
 *
 * # Safety
 * Non-null `x`/`u` must point to `cap` writable doubles.
 */
enum NlregStatus nlreg_solution_values(const struct NlregSolution *s,
                                       double *x,
                                       double *u,
                                       size_t cap);

/**
 * Evaluates the piecewise-linear solution (with its exterior data) at `x`.
 *
 * # Safety
 * `s` must be a live solution handle and `out` writable.
 */
enum NlregStatus nlreg_solution_eval(const struct NlregSolution *s, double x, double *out);

/**
 * Releases a solution; null is ignored.
 *
 * # Safety
 * `s` must come from [`nlreg_solve_constant`] and not be used afterwards.
 */
void nlreg_solution_free(struct NlregSolution *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLREG_H */
