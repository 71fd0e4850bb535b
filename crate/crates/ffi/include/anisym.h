#ifndef ANISYM_H
#define ANISYM_H

/* Generated by cbindgen; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AnisymStatus {
  ANISYM_STATUS_OK = 0,
  ANISYM_STATUS_NULL_POINTER = 1,
  ANISYM_STATUS_INVALID_ARGUMENT = 2,
  ANISYM_STATUS_SOLVER_FAILURE = 3,
  ANISYM_STATUS_CONFIG_ERROR = 4,
  ANISYM_STATUS_IO_ERROR = 5,
  ANISYM_STATUS_PANIC = 6,
} AnisymStatus;

/**
 * Grid function on a rectangle; values row-major, `j * nx + i`.
 */
typedef struct AnisymGrid AnisymGrid;

/**
 * Nonincreasing step profile of the mass coordinate.
 */
typedef struct AnisymProfile AnisymProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *anisym_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *anisym_version(void);

/**
 * # Safety
 * `alphas` and `exponents` point to `n` doubles; `out` is writable.
 */
enum AnisymStatus anisym_lambda_constant(const double *alphas,
                                         const double *exponents,
                                         size_t n,
                                         double *out);

/**
 * Smallest Dirichlet eigenvalue of the ball of radius `radius` in `dim`
 * dimensions.
 *
 * # Safety
 * `out` is writable.
 */
enum AnisymStatus anisym_eigenvalue(double radius, size_t dim, double *out);

/**
 * Copies `nx * ny` values into a new grid.
 *
 * # Safety
 * `values` points to `nx * ny` doubles; `out` is writable.
 */
enum AnisymStatus anisym_grid_new(size_t nx,
                                  size_t ny,
                                  double hx,
                                  double hy,
                                  const double *values,
                                  struct AnisymGrid **out);

/**
 * # Safety
 * `csv_path` is a NUL-terminated path; `out` is writable.
 */
enum AnisymStatus anisym_grid_load_csv(const char *csv_path, struct AnisymGrid **out);

/**
 * # Safety
 * `grid` is null or a handle from this library not yet freed.
 */
void anisym_grid_free(struct AnisymGrid *grid);

/**
 * # Safety
 * `grid` is a live handle; `nx`, `ny` are writable.
 */
enum AnisymStatus anisym_grid_shape(const struct AnisymGrid *grid, size_t *nx, size_t *ny);

/**
 * Copies the values into `out`, which holds `len` doubles.
 *
 * # Safety
 * `grid` is a live handle; `out` points to `len` writable doubles.
 */
enum AnisymStatus anisym_grid_values(const struct AnisymGrid *grid, double *out, size_t len);

/**
 * Decreasing rearrangement of `|grid|`.
 *
 * # Safety
 * `grid` is a live handle; `out` is writable.
 */
enum AnisymStatus anisym_rearrange(const struct AnisymGrid *grid, struct AnisymProfile **out);

/**
 * # Safety
 * `profile` is null or a handle from this library not yet freed.
 */
void anisym_profile_free(struct AnisymProfile *profile);

/**
 * Number of steps of the profile.
 *
 * # Safety
 * `profile` is a live handle; `out` is writable.
 */
enum AnisymStatus anisym_profile_steps(const struct AnisymProfile *profile, size_t *out);

/**
 * Copies `steps + 1` breakpoints and `steps` levels.
 *
 * # Safety
 * `profile` is a live handle; `breakpoints` holds `steps + 1` and `levels`
 * holds `steps` writable doubles.
 */
enum AnisymStatus anisym_profile_data(const struct AnisymProfile *profile,
                                      double *breakpoints,
                                      double *levels,
                                      size_t steps);

/**
 * `∫₀^s` of the profile.
 *
 * # Safety
 * `profile` is a live handle; `out` is writable.
 */
enum AnisymStatus anisym_profile_concentration(const struct AnisymProfile *profile,
                                               double s,
                                               double *out);

/**
 * Lorentz norm `‖·‖_{p,q}`; pass `INFINITY` for `q = ∞`.
 *
 * # Safety
 * `profile` is a live handle; `out` is writable.
 */
enum AnisymStatus anisym_profile_lorentz_norm(const struct AnisymProfile *profile,
                                              double p,
                                              double q,
                                              double *out);

/**
 * Solves the two-dimensional anisotropic problem with zero-order
 * coefficient `lambda0` and right-hand side `rhs`.
 *
 * # Safety
 * `alphas` and `exponents` point to 2 doubles; `rhs` is a live handle;
 * `out` is writable; `iterations` may be null.
 */
enum AnisymStatus anisym_elliptic_solve(const double *alphas,
                                        const double *exponents,
                                        double lambda0,
                                        const struct AnisymGrid *rhs,
                                        double tol,
                                        size_t max_iter,
                                        struct AnisymGrid **out,
                                        size_t *iterations);

/**
 * Runs a JSON scenario and writes its artifacts to `out_dir`. `passed`
 * receives 1 when every enabled check passes, else 0.
 *
 * # Safety
 * `config_path` and `out_dir` are NUL-terminated paths; `passed` is writable.
 */
enum AnisymStatus anisym_run_scenario(const char *config_path, const char *out_dir, int *passed);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ANISYM_H */
