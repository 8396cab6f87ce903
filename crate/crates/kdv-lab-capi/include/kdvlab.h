/* C ABI for the kdv-lab numerical laboratory.
 *
 * Generated with cbindgen from the kdv-lab-capi crate; regenerate with
 *   cbindgen --config cbindgen.toml --crate kdv-lab-capi --output include/kdvlab.h
 */

#ifndef KDVLAB_H
#define KDVLAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every fallible call.
typedef enum KdvlabStatus {
  KDVLAB_STATUS_OK = 0,
  KDVLAB_STATUS_NULL_POINTER = 1,
  KDVLAB_STATUS_INVALID_ARGUMENT = 2,
  KDVLAB_STATUS_NON_FINITE = 3,
  KDVLAB_STATUS_TRUNCATION = 4,
  KDVLAB_STATUS_INDEFINITE_COVARIANCE = 5,
  KDVLAB_STATUS_INTERNAL = 6,
} KdvlabStatus;

// Opaque zero-mean spectral field handle.
typedef struct KdvlabField KdvlabField;

// Opaque stochastic integrator: field state, damping, forcing profile,
// and a counter-based noise stream.
typedef struct KdvlabSpdeSim KdvlabSpdeSim;

// Opaque slow-fast system handle.
typedef struct KdvlabSystem KdvlabSystem;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copy the last error message of this thread into `buf` (NUL terminated,
// truncated to `len`). Returns the full message length in bytes, not
// counting the terminator.
//
// # Safety
// `buf` must point to `len` writable bytes (or be NULL, in which case only
// the length is returned).
size_t kdvlab_last_error_message(char *buf, size_t len);

// Static version string of the underlying laboratory crate.
const char *kdvlab_version(void);

// Create a zero field with cutoff `k_max`; `n_grid = 0` picks the smallest
// admissible power-of-two grid.
//
// # Safety
// `out` must be a valid pointer to a handle slot.
enum KdvlabStatus kdvlab_field_new(size_t k_max, size_t n_grid, struct KdvlabField **out);

// # Safety
// `field` must be a handle from this library, not yet freed; NULL is a
// no-op.
void kdvlab_field_free(struct KdvlabField *field);

// # Safety
// `field` and `out` must be valid.
enum KdvlabStatus kdvlab_field_clone(const struct KdvlabField *field, struct KdvlabField **out);

// Set amplitude `u_s`; rejects `s = 0` and `|s| > K`.
//
// # Safety
// `field` must be valid.
enum KdvlabStatus kdvlab_field_set_mode(struct KdvlabField *field, int64_t s, double amplitude);

// # Safety
// `field` and `out` must be valid.
enum KdvlabStatus kdvlab_field_coefficient(const struct KdvlabField *field, int64_t s, double *out);

// Cutoff `K` of the field; 0 for NULL.
//
// # Safety
// `field` must be valid or NULL.
size_t kdvlab_field_k_max(const struct KdvlabField *field);

// Sobolev norm `||u||_m`.
//
// # Safety
// `field` and `out` must be valid.
enum KdvlabStatus kdvlab_field_sobolev_norm(const struct KdvlabField *field,
                                            uint32_t m,
                                            double *out);

// Exact spectral derivative of the given order.
//
// # Safety
// `field` and `out` must be valid.
enum KdvlabStatus kdvlab_field_derivative(const struct KdvlabField *field,
                                          uint32_t order,
                                          struct KdvlabField **out);

// Translated field `x -> u(x - x0)`.
//
// # Safety
// `field` and `out` must be valid.
enum KdvlabStatus kdvlab_field_translate(const struct KdvlabField *field,
                                         double x0,
                                         struct KdvlabField **out);

// KdV vector field `V(u) = u_xxx - 6 u u_x` as a new field handle.
//
// # Safety
// `field` and `out` must be valid.
enum KdvlabStatus kdvlab_kdv_vector_field(const struct KdvlabField *field,
                                          struct KdvlabField **out);

// One unperturbed KdV step of size `dt` (integrating factor + RK4 stages).
//
// # Safety
// `field` and `out` must be valid.
enum KdvlabStatus kdvlab_step_deterministic(const struct KdvlabField *field,
                                            double dt,
                                            struct KdvlabField **out);

// Conserved functional `J_m`, `m` in `{0, 1, 2}`.
//
// # Safety
// `field` and `out` must be valid.
enum KdvlabStatus kdvlab_j_functional(const struct KdvlabField *field, uint32_t m, double *out);

// Create a stochastic integrator for the damped-driven equation with the
// inverse-power forcing profile `b_s = amplitude |s|^{-q}`. The noise
// stream is `(seed, stream)` of a counter-based generator, so distinct
// streams are independent and runs are reproducible.
//
// # Safety
// `field` and `out` must be valid.
enum KdvlabStatus kdvlab_spde_new(const struct KdvlabField *field,
                                  double nu,
                                  double dt,
                                  double noise_q,
                                  double noise_amplitude,
                                  uint64_t seed,
                                  uint64_t stream,
                                  struct KdvlabSpdeSim **out);

// # Safety
// `sim` must be a handle from this library, or NULL.
void kdvlab_spde_free(struct KdvlabSpdeSim *sim);

// Advance the integrator by `n_steps` steps.
//
// # Safety
// `sim` must be valid.
enum KdvlabStatus kdvlab_spde_advance(struct KdvlabSpdeSim *sim, uint64_t n_steps);

// Current model time of the integrator; NaN for NULL.
//
// # Safety
// `sim` must be valid or NULL.
double kdvlab_spde_time(const struct KdvlabSpdeSim *sim);

// Snapshot of the current state as a new field handle.
//
// # Safety
// `sim` and `out` must be valid.
enum KdvlabStatus kdvlab_spde_state(const struct KdvlabSpdeSim *sim, struct KdvlabField **out);

// Band edges and gaps of `-y'' + u y`. `edges_out` receives
// `2 k_spec + 1` values, `gaps_out` receives `k_spec` values (either may
// be NULL to skip).
//
// # Safety
// `field` must be valid; the output buffers, when non-NULL, must hold the
// documented number of doubles.
enum KdvlabStatus kdvlab_hill_band_edges(const struct KdvlabField *field,
                                         size_t k_spec,
                                         size_t m_trunc,
                                         double *edges_out,
                                         double *gaps_out);

// Gap-quadratic action estimates `I_k = c gap_k^2 / k` for `k = 1..k_spec`.
//
// # Safety
// `field` must be valid and `actions_out` must hold `k_spec` doubles.
enum KdvlabStatus kdvlab_hill_gap_actions(const struct KdvlabField *field,
                                          size_t k_spec,
                                          size_t m_trunc,
                                          double *actions_out);

// Linearized actions `I_k = (u_k^2 + u_{-k}^2)/(2k)` for `k = 1..m`.
//
// # Safety
// `field` must be valid and `actions_out` must hold `m` doubles.
enum KdvlabStatus kdvlab_linearized_actions(const struct KdvlabField *field,
                                            size_t m,
                                            double *actions_out);

// Linearized angles in `[0, 2pi)` for `k = 1..m`. `defined_out[k]` is 1
// where the angle is defined (may be NULL to skip); undefined slots carry
// 0 in `angles_out`.
//
// # Safety
// `field` must be valid; `angles_out` must hold `m` doubles and
// `defined_out`, when non-NULL, `m` bytes.
enum KdvlabStatus kdvlab_linearized_angles(const struct KdvlabField *field,
                                           size_t m,
                                           double *angles_out,
                                           uint8_t *defined_out);

// Rotating Ornstein-Uhlenbeck catalog system with `m` planar pairs.
// `omega` may be NULL, defaulting to frequencies `1..m`.
//
// # Safety
// `b` (and `omega` when non-NULL) must hold `m` doubles; `out` must be
// valid.
enum KdvlabStatus kdvlab_system_rotating_ou(size_t m,
                                            const double *b,
                                            const double *omega,
                                            struct KdvlabSystem **out);

// Twist catalog system: `W_k = k + I_k`,
// `F_k = c_k - I_k (1 + kappa cos phi_k)`, diagonal constant diffusion.
//
// # Safety
// `c` and `sigma` must hold `m` doubles; `out` must be valid.
enum KdvlabStatus kdvlab_system_twist(size_t m,
                                      const double *c,
                                      double kappa,
                                      const double *sigma,
                                      struct KdvlabSystem **out);

// # Safety
// `sys` must be a handle from this library, or NULL.
void kdvlab_system_free(struct KdvlabSystem *sys);

// Slow dimension of a system; 0 for NULL.
//
// # Safety
// `sys` must be valid or NULL.
size_t kdvlab_system_slow_dim(const struct KdvlabSystem *sys);

// Averaged drift `<F>`, covariance `<A>` and its symmetric square root at
// one point of the action octant, by tensor/lattice angle quadrature with
// `nodes` nodes per angle. `drift_out` holds `m` doubles; `cov_out` and
// `sqrt_out` hold `m*m` doubles row-major (each may be NULL to skip).
//
// # Safety
// `sys` must be valid; `actions` must hold `m` doubles; non-NULL output
// buffers must have the documented sizes.
enum KdvlabStatus kdvlab_averaged_coefficients(const struct KdvlabSystem *sys,
                                               const double *actions,
                                               size_t m,
                                               size_t nodes,
                                               double *drift_out,
                                               double *cov_out,
                                               double *sqrt_out);

// Determinant of the frequency-map Jacobian at the given actions.
//
// # Safety
// `sys` must be valid; `actions` must hold `m` doubles; `out` must be
// valid.
enum KdvlabStatus kdvlab_frequency_jacobian_det(const struct KdvlabSystem *sys,
                                                const double *actions,
                                                size_t m,
                                                double *out);

// Euler-Maruyama fast-slow path; writes the final actions and angles
// (each `m` doubles) and the boundary-clamp event count.
//
// # Safety
// `sys` must be valid; `actions0`, `angles0` must hold `m` doubles;
// non-NULL outputs must have the documented sizes.
enum KdvlabStatus kdvlab_simulate_fast_slow_final(const struct KdvlabSystem *sys,
                                                  double nu,
                                                  const double *actions0,
                                                  const double *angles0,
                                                  size_t m,
                                                  double t_slow,
                                                  double dt,
                                                  uint64_t seed,
                                                  uint64_t stream,
                                                  double *actions_out,
                                                  double *angles_out,
                                                  uint64_t *clamp_events_out);

// Euler-Maruyama path of the averaged (Whitham) equation using the
// system's closed-form averaged coefficients; writes the final actions.
// Fails with `InvalidArgument` when the system carries no closed forms.
//
// # Safety
// `sys` must be valid; `actions0` must hold `m` doubles; `actions_out`
// must hold `m` doubles.
enum KdvlabStatus kdvlab_simulate_whitham_final(const struct KdvlabSystem *sys,
                                                const double *actions0,
                                                size_t m,
                                                double t_slow,
                                                double dt,
                                                uint64_t seed,
                                                uint64_t stream,
                                                double *actions_out);

// Two-sample Kolmogorov-Smirnov statistic.
//
// # Safety
// `a` and `b` must hold `na` and `nb` doubles; `out` must be valid.
enum KdvlabStatus kdvlab_ks_two_sample(const double *a,
                                       size_t na,
                                       const double *b,
                                       size_t nb,
                                       double *out);

// Magnitude of the first circular moment of an angle sample; 0 for an
// empty sample.
//
// # Safety
// `angles` must hold `n` doubles.
double kdvlab_circular_first_moment(const double *angles, size_t n);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KDVLAB_H */
