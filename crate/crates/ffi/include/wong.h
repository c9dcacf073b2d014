#ifndef WONG_H
#define WONG_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WongStatus {
  WONG_STATUS_OK = 0,
  WONG_STATUS_NULL_POINTER = 1,
  WONG_STATUS_INVALID_ARGUMENT = 2,
  WONG_STATUS_UNKNOWN_SYSTEM = 3,
  WONG_STATUS_DIMENSION_MISMATCH = 4,
  /**
   * Degenerate orbit, Gribov horizon, solver or step failure.
   */
  WONG_STATUS_NUMERICAL_FAILURE = 5,
  WONG_STATUS_IO = 6,
  WONG_STATUS_PANIC = 7,
} WongStatus;

/**
 * Chart system handle.
 */
typedef struct WongSystem WongSystem;

/**
 * Trajectory handle.
 */
typedef struct WongTrajectory WongTrajectory;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length without the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t wong_last_error_message(char *buf, size_t len);

/**
 * Creates a builtin system by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WongStatus wong_system_new(const char *name, struct WongSystem **out);

/**
 * # Safety
 * `sys` must be null or a handle from [`wong_system_new`] not freed before.
 */
void wong_system_free(struct WongSystem *sys);

/**
 * Chart dimension `n_p` and group dimension `n_g`.
 *
 * # Safety
 * All pointers must be valid.
 */
enum WongStatus wong_system_dims(const struct WongSystem *sys, size_t *n_p, size_t *n_g);

/**
 * Right-hand side of the reduced equations at `(q, v, p)`. `q`, `v`, `dv`
 * hold `n_p` values and `p`, `dp` hold `n_g`.
 *
 * # Safety
 * Arrays must have the lengths above.
 */
enum WongStatus wong_rhs(const struct WongSystem *sys,
                         const double *q,
                         const double *v,
                         const double *p,
                         double *dv,
                         double *dp);

/**
 * Conserved energy of a state.
 *
 * # Safety
 * Arrays as in [`wong_rhs`]; `out` must be valid.
 */
enum WongStatus wong_energy(const struct WongSystem *sys,
                            const double *q,
                            const double *v,
                            const double *p,
                            double *out);

/**
 * Integrates with fixed-step RK4 and constraint projection.
 *
 * # Safety
 * Arrays as in [`wong_rhs`]; `out` must be valid.
 */
enum WongStatus wong_integrate(const struct WongSystem *sys,
                               const double *q,
                               const double *v,
                               const double *p,
                               double dt,
                               size_t n_steps,
                               struct WongTrajectory **out);

/**
 * # Safety
 * `tr` must be null or a handle from [`wong_integrate`] not freed before.
 */
void wong_trajectory_free(struct WongTrajectory *tr);

/**
 * Number of recorded states, including the initial one; 0 for null.
 *
 * # Safety
 * `tr` must be null or a valid handle.
 */
size_t wong_trajectory_len(const struct WongTrajectory *tr);

/**
 * Time, state and energy at record `i`. Any output pointer may be null.
 *
 * # Safety
 * `tr` must be valid; non-null outputs must hold `n_p`, `n_p`, `n_g` values.
 */
enum WongStatus wong_trajectory_get(const struct WongTrajectory *tr,
                                    size_t i,
                                    double *t,
                                    double *q,
                                    double *v,
                                    double *p,
                                    double *energy);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WONG_H */
