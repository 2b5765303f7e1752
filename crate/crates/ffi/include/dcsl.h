#ifndef DCSL_H
#define DCSL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum DcslStatus {
  DCSL_STATUS_OK = 0,
  DCSL_STATUS_NULL_POINTER = 1,
  DCSL_STATUS_DOMAIN = 2,
  DCSL_STATUS_GRID_MISMATCH = 3,
  DCSL_STATUS_INTEGRATION = 4,
  DCSL_STATUS_POSITIVITY = 5,
  DCSL_STATUS_FIT_QUALITY = 6,
  DCSL_STATUS_CONFIG = 7,
  DCSL_STATUS_IO = 8,
  DCSL_STATUS_BUFFER_TOO_SMALL = 9,
  DCSL_STATUS_PANIC = 10,
} DcslStatus;

/*
 Density matrix under the master equation.
 */
typedef struct DcslMaster DcslMaster;

/*
 Single nonlinear trajectory.
 */
typedef struct DcslTrajectory DcslTrajectory;

typedef struct DcslRates {
  double gamma;
  double chi;
  double ratio;
  double asymptotic_ratio;
  double n_particles;
} DcslRates;

typedef struct DcslObservables {
  double time;
  double norm;
  double mean_x;
  double var_x;
  double mean_p;
  double kinetic_energy;
} DcslObservables;

typedef struct DcslMasterState {
  double time;
  double trace;
  double kinetic_energy;
  double min_eigenvalue;
} DcslMasterState;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Library version as a static NUL-terminated string.
 */
const char *dcsl_version(void);

/*
 Copies the calling thread's last error message into `buf` (NUL-terminated,
 truncated to `len`). Returns the full message length excluding the NUL.

 # Safety
 `buf` must be null or point to `len` writable bytes.
 */
size_t dcsl_last_error_message(char *buf, size_t len);

/*
 `lambda = gamma / (4 pi r_C^2)^{3/2}` in SI units (`gamma` in m^3/s).

 # Safety
 `out` must be a valid pointer.
 */
enum DcslStatus dcsl_lambda_from_gamma(double gamma, double r_c, double *out);

/*
 `k = hbar / (2 m v_eta r_C)`.

 # Safety
 `out` must be a valid pointer.
 */
enum DcslStatus dcsl_k_from_v_eta(double mass, double v_eta, double r_c, double *out);

/*
 Noise temperature `hbar v_eta / (4 k_B r_C)` in kelvin.

 # Safety
 `out` must be a valid pointer.
 */
enum DcslStatus dcsl_temperature_from_v_eta(double v_eta, double r_c, double *out);

/*
 Rates of a homogeneous sphere of `n_particles` nucleons, or of the
 reference density when `n_particles <= 0`.

 # Safety
 `out` must be a valid pointer.
 */
enum DcslStatus dcsl_sphere_rates(double lambda,
                                  double k,
                                  double r_c,
                                  double radius,
                                  double n_particles,
                                  struct DcslRates *out);

/*
 Creates a trajectory from the two-peak state `w_right g(x - alpha) + w_left g(x + alpha)`.

 # Safety
 `out` must be a valid pointer; on success it receives a handle owned by
 the caller.
 */
enum DcslStatus dcsl_trajectory_new(double k,
                                    size_t n,
                                    double length,
                                    double alpha,
                                    double sigma,
                                    double w_right,
                                    double w_left,
                                    double dt,
                                    uint64_t seed,
                                    uint64_t trajectory,
                                    bool free_hamiltonian,
                                    struct DcslTrajectory **out);

/*
 Advances the trajectory by `n_steps` steps.

 # Safety
 `h` must be a live handle from `dcsl_trajectory_new`.
 */
enum DcslStatus dcsl_trajectory_step(struct DcslTrajectory *h, size_t n_steps);

/*
 # Safety
 `h` must be a live handle and `out` a valid pointer.
 */
enum DcslStatus dcsl_trajectory_observables(const struct DcslTrajectory *h,
                                            struct DcslObservables *out);

/*
 Writes `|psi(x_i)|^2` on the grid into `buf`, which must hold `len >= n` values.

 # Safety
 `h` must be a live handle and `buf` must point to `len` writable doubles.
 */
enum DcslStatus dcsl_trajectory_density(const struct DcslTrajectory *h, double *buf, size_t len);

/*
 # Safety
 `h` must be null or a handle from `dcsl_trajectory_new` not freed before.
 */
void dcsl_trajectory_free(struct DcslTrajectory *h);

/*
 Starts from a Gaussian packet of width `sigma` at `x0` with momentum `p0`.
 `appendix_a` selects the anisotropic kernel.

 # Safety
 `out` must be a valid pointer; on success it receives a handle owned by
 the caller.
 */
enum DcslStatus dcsl_master_new(double k,
                                size_t n,
                                double length,
                                double sigma,
                                double x0,
                                double p0,
                                bool free_hamiltonian,
                                bool appendix_a,
                                struct DcslMaster **out);

/*
 Advances by `n_steps` fourth-order steps of size `dt`.

 # Safety
 `h` must be a live handle from `dcsl_master_new`.
 */
enum DcslStatus dcsl_master_step(struct DcslMaster *h, double dt, size_t n_steps);

/*
 # Safety
 `h` must be a live handle and `out` a valid pointer.
 */
enum DcslStatus dcsl_master_state(const struct DcslMaster *h, struct DcslMasterState *out);

/*
 Stationarity residual of the thermal state at `temperature_scale` times
 the noise temperature.

 # Safety
 `h` must be a live handle and `out` a valid pointer.
 */
enum DcslStatus dcsl_master_gibbs_residual(const struct DcslMaster *h,
                                           double temperature_scale,
                                           double *out);

/*
 # Safety
 `h` must be null or a handle from `dcsl_master_new` not freed before.
 */
void dcsl_master_free(struct DcslMaster *h);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DCSL_H */
