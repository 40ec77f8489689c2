#ifndef SRAAR_H
#define SRAAR_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum SraarStatus {
  SRAAR_STATUS_OK = 0,
  SRAAR_STATUS_NULL_POINTER = 1,
  SRAAR_STATUS_DIMENSION = 2,
  SRAAR_STATUS_BOUNDS = 3,
  SRAAR_STATUS_CONFIG = 4,
  SRAAR_STATUS_FORMAT = 5,
  SRAAR_STATUS_IO = 6,
  SRAAR_STATUS_UNDEFINED_METRIC = 7,
  SRAAR_STATUS_BUFFER_TOO_SMALL = 8,
  SRAAR_STATUS_INVALID_ARGUMENT = 9,
  SRAAR_STATUS_PANIC = 10,
} SraarStatus;

/**
 * Solver selector for [`SraarReconConfig`].
 */
typedef enum SraarSolver {
  SRAAR_SOLVER_ER = 0,
  SRAAR_SOLVER_SRAAR = 1,
} SraarSolver;

/**
 * Opaque square complex array (image or k-space samples).
 */
typedef struct SraarArray SraarArray;

/**
 * Opaque reconstruction result.
 */
typedef struct SraarReconstruction SraarReconstruction;

/**
 * Opaque per-line motion trajectory.
 */
typedef struct SraarTrajectory SraarTrajectory;

/**
 * Reconstruction settings. Obtain defaults from
 * [`sraar_recon_config_default`].
 *
 * When `c_grid` is non-null and `c_grid_len > 0` the budget is tuned over
 * those fractions of the naive image's l1 norm; otherwise `c` is used as a
 * fixed budget. `wavelet_levels == 0` selects full depth.
 */
typedef struct SraarReconConfig {
  enum SraarSolver solver;
  double theta;
  uintptr_t iterations;
  double c;
  const double *c_grid;
  uintptr_t c_grid_len;
  double max_shift_x;
  double max_shift_y;
  double grid_step;
  bool amplitude_replacement;
  uintptr_t wavelet_levels;
} SraarReconConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 */
uintptr_t sraar_last_error_message(char *buf, uintptr_t len);

/**
 * Builds an `n x n` array from real and imaginary buffers of `n * n`
 * doubles. `im` may be null for real data.
 */
enum SraarStatus sraar_array_new(uintptr_t n,
                                 const double *re,
                                 const double *im,
                                 struct SraarArray **out);

void sraar_array_free(struct SraarArray *array);

/**
 * Side length `n` of the array, or 0 for a null handle.
 */
uintptr_t sraar_array_size(const struct SraarArray *array);

/**
 * Copies the samples into caller buffers of at least `n * n` doubles each.
 * `im` may be null.
 */
enum SraarStatus sraar_array_copy(const struct SraarArray *array,
                                  double *re,
                                  double *im,
                                  uintptr_t len);

/**
 * Shepp-Logan phantom of side `n`.
 */
enum SraarStatus sraar_shepp_logan(uintptr_t n, struct SraarArray **out);

/**
 * Unitary centered forward DFT.
 */
enum SraarStatus sraar_dft2(const struct SraarArray *image, struct SraarArray **out);

/**
 * Inverse of [`sraar_dft2`].
 */
enum SraarStatus sraar_idft2(const struct SraarArray *kspace, struct SraarArray **out);

/**
 * Full-depth Haar l1 norm of an image.
 */
enum SraarStatus sraar_wavelet_l1(const struct SraarArray *image, double *out);

/**
 * Reads a raw `SRR1` file.
 */
enum SraarStatus sraar_array_read(const char *path, struct SraarArray **out);

/**
 * Writes a raw `SRR1` file, as complex64 when `complex` is true and as
 * float32 real parts otherwise.
 */
enum SraarStatus sraar_array_write(const struct SraarArray *array, const char *path, bool complex);

/**
 * Trajectory from per-line displacement buffers of length `n_lines`.
 */
enum SraarStatus sraar_trajectory_new(const double *xs,
                                      const double *ys,
                                      uintptr_t n_lines,
                                      struct SraarTrajectory **out);

/**
 * Random smooth trajectory for `ground_truth`, placed in the estimator's
 * gauge and confined to `|beta_x| <= max_shift_x`, `|beta_y| <= max_shift_y`.
 */
enum SraarStatus sraar_trajectory_generate(const struct SraarArray *ground_truth,
                                           double max_shift_x,
                                           double max_shift_y,
                                           uintptr_t smoothness,
                                           uint64_t seed,
                                           struct SraarTrajectory **out);

void sraar_trajectory_free(struct SraarTrajectory *traj);

/**
 * Number of lines, or 0 for a null handle.
 */
uintptr_t sraar_trajectory_len(const struct SraarTrajectory *traj);

/**
 * Copies displacements into buffers of at least `len` doubles each.
 */
enum SraarStatus sraar_trajectory_copy(const struct SraarTrajectory *traj,
                                       double *xs,
                                       double *ys,
                                       uintptr_t len);

/**
 * Motion-corrupted k-space of `ground_truth`. Pass NaN as `snr_db` for
 * noise-free data.
 */
enum SraarStatus sraar_corrupt(const struct SraarArray *ground_truth,
                               const struct SraarTrajectory *traj,
                               double snr_db,
                               uint64_t seed,
                               struct SraarArray **out);

/**
 * Fills `cfg` with the library defaults (SRAAR, theta 0.9, 100 iterations,
 * 5 px bounds, 0.25 px search step, amplitude replacement on). The budget
 * defaults to a fixed `c = 0`; set `c` or `c_grid` before use.
 */
enum SraarStatus sraar_recon_config_default(struct SraarReconConfig *cfg);

/**
 * Runs the configured solver on observed k-space.
 */
enum SraarStatus sraar_reconstruct(const struct SraarArray *kspace,
                                   const struct SraarReconConfig *cfg,
                                   struct SraarReconstruction **out);

void sraar_reconstruction_free(struct SraarReconstruction *rec);

/**
 * New handle holding a copy of the reconstructed image.
 */
enum SraarStatus sraar_reconstruction_image(const struct SraarReconstruction *rec,
                                            struct SraarArray **out);

/**
 * New handle holding a copy of the estimated trajectory.
 */
enum SraarStatus sraar_reconstruction_trajectory(const struct SraarReconstruction *rec,
                                                 struct SraarTrajectory **out);

/**
 * The l1 budget the result was produced with (NaN for a null handle).
 */
double sraar_reconstruction_budget(const struct SraarReconstruction *rec);

/**
 * Number of trace records (one per iteration).
 */
uintptr_t sraar_reconstruction_trace_len(const struct SraarReconstruction *rec);

/**
 * Copies per-iteration data misfit and l1 norm into buffers of at least
 * `len` doubles. Either buffer may be null.
 */
enum SraarStatus sraar_reconstruction_trace_copy(const struct SraarReconstruction *rec,
                                                 double *misfit,
                                                 double *l1,
                                                 uintptr_t len);

/**
 * Relative RMSE and PSNR (dB, +inf when exact) of `x` against `gt`, on
 * pixel moduli.
 */
enum SraarStatus sraar_image_metrics(const struct SraarArray *x,
                                     const struct SraarArray *gt,
                                     double *rmse_rel,
                                     double *psnr_db);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SRAAR_H */
