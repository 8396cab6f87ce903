//! C ABI for the kdv-lab numerical laboratory.
//!
//! Conventions:
//! - every fallible call returns a [`KdvlabStatus`]; `KDVLAB_OK` is 0,
//! - objects cross the boundary as opaque handles created by `*_new`
//!   functions and released by the matching `*_free` (never `free()`),
//! - output buffers are caller-allocated; lengths are documented per call,
//! - the last error message is kept per thread and retrieved with
//!   [`kdvlab_last_error_message`].
//!
//! The committed header `include/kdvlab.h` is generated with cbindgen
//! (`cbindgen --config cbindgen.toml --crate kdv-lab-capi --output
//! include/kdvlab.h`).

use std::cell::RefCell;
use std::ffi::{c_char, CString};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use kdv_lab::averaging::{
    averaged_coefficients, frequency_jacobian_det, simulate_fast_slow, simulate_whitham,
    AveragingSystem, ClosedFormAveraged, QuadratureConfig, RotatingOuSystem, TwistSystem,
};
use kdv_lab::conserved::j_functional;
use kdv_lab::error::{AveragingError, FieldError, HillError, SolverError};
use kdv_lab::fourier::SpectralField;
use kdv_lab::kdv::{KdvIntegrator, Scheme, SdeStepperConfig};
use kdv_lab::noise::NoiseSpec;
use kdv_lab::{hill, stats};

/// Status codes returned by every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KdvlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    NonFinite = 3,
    Truncation = 4,
    IndefiniteCovariance = 5,
    Internal = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into();
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(msg).unwrap_or_default();
    });
}

fn fail(status: KdvlabStatus, msg: impl Into<String>) -> KdvlabStatus {
    set_error(msg);
    status
}

fn field_error(err: FieldError) -> KdvlabStatus {
    fail(KdvlabStatus::InvalidArgument, err.to_string())
}

fn solver_error(err: SolverError) -> KdvlabStatus {
    let status = match err {
        SolverError::NonFinite { .. } => KdvlabStatus::NonFinite,
        _ => KdvlabStatus::InvalidArgument,
    };
    fail(status, err.to_string())
}

fn hill_error(err: HillError) -> KdvlabStatus {
    let status = match err {
        HillError::Truncation { .. } | HillError::TruncationBelowMinimum { .. } => {
            KdvlabStatus::Truncation
        }
        HillError::Field(_) => KdvlabStatus::InvalidArgument,
    };
    fail(status, err.to_string())
}

fn averaging_error(err: AveragingError) -> KdvlabStatus {
    let status = match err {
        AveragingError::IndefiniteCovariance { .. } => KdvlabStatus::IndefiniteCovariance,
        AveragingError::NonFinite { .. } => KdvlabStatus::NonFinite,
        _ => KdvlabStatus::InvalidArgument,
    };
    fail(status, err.to_string())
}

/// Copy the last error message of this thread into `buf` (NUL terminated,
/// truncated to `len`). Returns the full message length in bytes, not
/// counting the terminator.
///
/// # Safety
/// `buf` must point to `len` writable bytes (or be NULL, in which case only
/// the length is returned).
#[no_mangle]
pub unsafe extern "C" fn kdvlab_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let msg = slot.borrow();
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
        bytes.len()
    })
}

/// Static version string of the underlying laboratory crate.
#[no_mangle]
pub extern "C" fn kdvlab_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

// ---------------------------------------------------------------------------
// Spectral fields
// ---------------------------------------------------------------------------

/// Opaque zero-mean spectral field handle.
pub struct KdvlabField(SpectralField);

/// Create a zero field with cutoff `k_max`; `n_grid = 0` picks the smallest
/// admissible power-of-two grid.
///
/// # Safety
/// `out` must be a valid pointer to a handle slot.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_field_new(
    k_max: usize,
    n_grid: usize,
    out: *mut *mut KdvlabField,
) -> KdvlabStatus {
    if out.is_null() {
        return fail(KdvlabStatus::NullPointer, "out is NULL");
    }
    let field = if n_grid == 0 {
        Ok(SpectralField::zeros(k_max))
    } else {
        SpectralField::zeros_with_grid(k_max, n_grid)
    };
    match field {
        Ok(f) => {
            *out = Box::into_raw(Box::new(KdvlabField(f)));
            KdvlabStatus::Ok
        }
        Err(e) => field_error(e),
    }
}

/// # Safety
/// `field` must be a handle from this library, not yet freed; NULL is a
/// no-op.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_field_free(field: *mut KdvlabField) {
    if !field.is_null() {
        drop(Box::from_raw(field));
    }
}

/// # Safety
/// `field` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_field_clone(
    field: *const KdvlabField,
    out: *mut *mut KdvlabField,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or out is NULL");
    };
    *out = Box::into_raw(Box::new(KdvlabField(field.0.clone())));
    KdvlabStatus::Ok
}

/// Set amplitude `u_s`; rejects `s = 0` and `|s| > K`.
///
/// # Safety
/// `field` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_field_set_mode(
    field: *mut KdvlabField,
    s: i64,
    amplitude: f64,
) -> KdvlabStatus {
    let Some(field) = field.as_mut() else {
        return fail(KdvlabStatus::NullPointer, "field is NULL");
    };
    match field.0.set_coefficient(s, amplitude) {
        Ok(()) => KdvlabStatus::Ok,
        Err(e) => field_error(e),
    }
}

/// # Safety
/// `field` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_field_coefficient(
    field: *const KdvlabField,
    s: i64,
    out: *mut f64,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or out is NULL");
    };
    match field.0.coefficient(s) {
        Ok(v) => {
            *out = v;
            KdvlabStatus::Ok
        }
        Err(e) => field_error(e),
    }
}

/// Cutoff `K` of the field; 0 for NULL.
///
/// # Safety
/// `field` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_field_k_max(field: *const KdvlabField) -> usize {
    field.as_ref().map_or(0, |f| f.0.k_max())
}

/// Sobolev norm `||u||_m`.
///
/// # Safety
/// `field` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_field_sobolev_norm(
    field: *const KdvlabField,
    m: u32,
    out: *mut f64,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or out is NULL");
    };
    *out = field.0.sobolev_norm(m as usize);
    KdvlabStatus::Ok
}

/// Exact spectral derivative of the given order.
///
/// # Safety
/// `field` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_field_derivative(
    field: *const KdvlabField,
    order: u32,
    out: *mut *mut KdvlabField,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or out is NULL");
    };
    *out = Box::into_raw(Box::new(KdvlabField(field.0.derivative(order as usize))));
    KdvlabStatus::Ok
}

/// Translated field `x -> u(x - x0)`.
///
/// # Safety
/// `field` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_field_translate(
    field: *const KdvlabField,
    x0: f64,
    out: *mut *mut KdvlabField,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or out is NULL");
    };
    *out = Box::into_raw(Box::new(KdvlabField(field.0.translate(x0))));
    KdvlabStatus::Ok
}

// ---------------------------------------------------------------------------
// Dynamics and conserved functionals
// ---------------------------------------------------------------------------

/// KdV vector field `V(u) = u_xxx - 6 u u_x` as a new field handle.
///
/// # Safety
/// `field` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_kdv_vector_field(
    field: *const KdvlabField,
    out: *mut *mut KdvlabField,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or out is NULL");
    };
    *out = Box::into_raw(Box::new(KdvlabField(kdv_lab::kdv::kdv_vector_field(
        &field.0,
    ))));
    KdvlabStatus::Ok
}

/// One unperturbed KdV step of size `dt` (integrating factor + RK4 stages).
///
/// # Safety
/// `field` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_step_deterministic(
    field: *const KdvlabField,
    dt: f64,
    out: *mut *mut KdvlabField,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or out is NULL");
    };
    match kdv_lab::kdv::step_deterministic(&field.0, dt) {
        Ok(f) => {
            *out = Box::into_raw(Box::new(KdvlabField(f)));
            KdvlabStatus::Ok
        }
        Err(e) => solver_error(e),
    }
}

/// Conserved functional `J_m`, `m` in `{0, 1, 2}`.
///
/// # Safety
/// `field` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_j_functional(
    field: *const KdvlabField,
    m: u32,
    out: *mut f64,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or out is NULL");
    };
    match j_functional(&field.0, m as usize) {
        Ok(v) => {
            *out = v;
            KdvlabStatus::Ok
        }
        Err(e) => field_error(e),
    }
}

/// Opaque stochastic integrator: field state, damping, forcing profile,
/// and a counter-based noise stream.
pub struct KdvlabSpdeSim {
    integrator: KdvIntegrator,
    state: Vec<kdv_lab::kdv::StateComplex>,
    cfg: SdeStepperConfig,
    spec: NoiseSpec,
    rng: ChaCha12Rng,
    t: f64,
}

/// Create a stochastic integrator for the damped-driven equation with the
/// inverse-power forcing profile `b_s = amplitude |s|^{-q}`. The noise
/// stream is `(seed, stream)` of a counter-based generator, so distinct
/// streams are independent and runs are reproducible.
///
/// # Safety
/// `field` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_spde_new(
    field: *const KdvlabField,
    nu: f64,
    dt: f64,
    noise_q: f64,
    noise_amplitude: f64,
    seed: u64,
    stream: u64,
    out: *mut *mut KdvlabSpdeSim,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or out is NULL");
    };
    let cfg = SdeStepperConfig {
        dt,
        scheme: Scheme::ImexExponential,
        nu,
    };
    if let Err(e) = cfg.validate() {
        return solver_error(e);
    }
    let spec = match NoiseSpec::inverse_power(field.0.k_max(), noise_q, noise_amplitude) {
        Ok(s) => s,
        Err(e) => return field_error(e),
    };
    let integrator = KdvIntegrator::for_field(&field.0, nu);
    let state = integrator.state_from_field(&field.0);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    *out = Box::into_raw(Box::new(KdvlabSpdeSim {
        integrator,
        state,
        cfg,
        spec,
        rng,
        t: 0.0,
    }));
    KdvlabStatus::Ok
}

/// # Safety
/// `sim` must be a handle from this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_spde_free(sim: *mut KdvlabSpdeSim) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advance the integrator by `n_steps` steps.
///
/// # Safety
/// `sim` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_spde_advance(
    sim: *mut KdvlabSpdeSim,
    n_steps: u64,
) -> KdvlabStatus {
    let Some(sim) = sim.as_mut() else {
        return fail(KdvlabStatus::NullPointer, "sim is NULL");
    };
    for _ in 0..n_steps {
        sim.integrator.step_ifrk4(&mut sim.state, sim.cfg.dt);
        sim.integrator
            .add_noise(&mut sim.state, &sim.spec, sim.cfg.dt, &mut sim.rng);
        sim.t += sim.cfg.dt;
        if let Err(e) = sim.integrator.check_state(&sim.state, sim.t) {
            return solver_error(e);
        }
    }
    KdvlabStatus::Ok
}

/// Current model time of the integrator; NaN for NULL.
///
/// # Safety
/// `sim` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_spde_time(sim: *const KdvlabSpdeSim) -> f64 {
    sim.as_ref().map_or(f64::NAN, |s| s.t)
}

/// Snapshot of the current state as a new field handle.
///
/// # Safety
/// `sim` and `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_spde_state(
    sim: *const KdvlabSpdeSim,
    out: *mut *mut KdvlabField,
) -> KdvlabStatus {
    let (Some(sim), false) = (sim.as_ref(), out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "sim or out is NULL");
    };
    let field = sim.integrator.field_from_state(&sim.state);
    *out = Box::into_raw(Box::new(KdvlabField(field)));
    KdvlabStatus::Ok
}

// ---------------------------------------------------------------------------
// Hill spectrum and action/angle estimators
// ---------------------------------------------------------------------------

/// Band edges and gaps of `-y'' + u y`. `edges_out` receives
/// `2 k_spec + 1` values, `gaps_out` receives `k_spec` values (either may
/// be NULL to skip).
///
/// # Safety
/// `field` must be valid; the output buffers, when non-NULL, must hold the
/// documented number of doubles.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_hill_band_edges(
    field: *const KdvlabField,
    k_spec: usize,
    m_trunc: usize,
    edges_out: *mut f64,
    gaps_out: *mut f64,
) -> KdvlabStatus {
    let Some(field) = field.as_ref() else {
        return fail(KdvlabStatus::NullPointer, "field is NULL");
    };
    match hill::band_edges(&field.0, k_spec, m_trunc) {
        Ok(spectrum) => {
            if !edges_out.is_null() {
                std::ptr::copy_nonoverlapping(
                    spectrum.edges.as_ptr(),
                    edges_out,
                    spectrum.edges.len(),
                );
            }
            if !gaps_out.is_null() {
                std::ptr::copy_nonoverlapping(
                    spectrum.gaps.as_ptr(),
                    gaps_out,
                    spectrum.gaps.len(),
                );
            }
            KdvlabStatus::Ok
        }
        Err(e) => hill_error(e),
    }
}

/// Gap-quadratic action estimates `I_k = c gap_k^2 / k` for `k = 1..k_spec`.
///
/// # Safety
/// `field` must be valid and `actions_out` must hold `k_spec` doubles.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_hill_gap_actions(
    field: *const KdvlabField,
    k_spec: usize,
    m_trunc: usize,
    actions_out: *mut f64,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), actions_out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or actions_out is NULL");
    };
    match hill::band_edges(&field.0, k_spec, m_trunc) {
        Ok(spectrum) => {
            let state = hill::actions_from_gaps(&spectrum);
            std::ptr::copy_nonoverlapping(state.actions.as_ptr(), actions_out, k_spec);
            KdvlabStatus::Ok
        }
        Err(e) => hill_error(e),
    }
}

/// Linearized actions `I_k = (u_k^2 + u_{-k}^2)/(2k)` for `k = 1..m`.
///
/// # Safety
/// `field` must be valid and `actions_out` must hold `m` doubles.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_linearized_actions(
    field: *const KdvlabField,
    m: usize,
    actions_out: *mut f64,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), actions_out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or actions_out is NULL");
    };
    match hill::linearized_actions(&field.0, m) {
        Ok(state) => {
            std::ptr::copy_nonoverlapping(state.actions.as_ptr(), actions_out, m);
            KdvlabStatus::Ok
        }
        Err(e) => field_error(e),
    }
}

/// Linearized angles in `[0, 2pi)` for `k = 1..m`. `defined_out[k]` is 1
/// where the angle is defined (may be NULL to skip); undefined slots carry
/// 0 in `angles_out`.
///
/// # Safety
/// `field` must be valid; `angles_out` must hold `m` doubles and
/// `defined_out`, when non-NULL, `m` bytes.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_linearized_angles(
    field: *const KdvlabField,
    m: usize,
    angles_out: *mut f64,
    defined_out: *mut u8,
) -> KdvlabStatus {
    let (Some(field), false) = (field.as_ref(), angles_out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "field or angles_out is NULL");
    };
    match hill::linearized_angles(&field.0, m, hill::DEFAULT_ANGLE_FLOOR) {
        Ok(state) => {
            std::ptr::copy_nonoverlapping(state.angles.as_ptr(), angles_out, m);
            if !defined_out.is_null() {
                for (k, &d) in state.angle_defined.iter().enumerate() {
                    *defined_out.add(k) = d as u8;
                }
            }
            KdvlabStatus::Ok
        }
        Err(e) => field_error(e),
    }
}

// ---------------------------------------------------------------------------
// Averaging engine
// ---------------------------------------------------------------------------

/// Opaque slow-fast system handle.
pub struct KdvlabSystem(Box<dyn AveragingSystem>);

/// Rotating Ornstein-Uhlenbeck catalog system with `m` planar pairs.
/// `omega` may be NULL, defaulting to frequencies `1..m`.
///
/// # Safety
/// `b` (and `omega` when non-NULL) must hold `m` doubles; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_system_rotating_ou(
    m: usize,
    b: *const f64,
    omega: *const f64,
    out: *mut *mut KdvlabSystem,
) -> KdvlabStatus {
    if b.is_null() || out.is_null() {
        return fail(KdvlabStatus::NullPointer, "b or out is NULL");
    }
    let b = std::slice::from_raw_parts(b, m).to_vec();
    let omega = if omega.is_null() {
        (1..=m).map(|k| k as f64).collect()
    } else {
        std::slice::from_raw_parts(omega, m).to_vec()
    };
    match RotatingOuSystem::new(b, omega) {
        Ok(sys) => {
            *out = Box::into_raw(Box::new(KdvlabSystem(Box::new(sys))));
            KdvlabStatus::Ok
        }
        Err(e) => averaging_error(e),
    }
}

/// Twist catalog system: `W_k = k + I_k`,
/// `F_k = c_k - I_k (1 + kappa cos phi_k)`, diagonal constant diffusion.
///
/// # Safety
/// `c` and `sigma` must hold `m` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_system_twist(
    m: usize,
    c: *const f64,
    kappa: f64,
    sigma: *const f64,
    out: *mut *mut KdvlabSystem,
) -> KdvlabStatus {
    if c.is_null() || sigma.is_null() || out.is_null() {
        return fail(KdvlabStatus::NullPointer, "c, sigma, or out is NULL");
    }
    let c = std::slice::from_raw_parts(c, m).to_vec();
    let sigma = std::slice::from_raw_parts(sigma, m).to_vec();
    match TwistSystem::new(c, kappa, sigma) {
        Ok(sys) => {
            *out = Box::into_raw(Box::new(KdvlabSystem(Box::new(sys))));
            KdvlabStatus::Ok
        }
        Err(e) => averaging_error(e),
    }
}

/// # Safety
/// `sys` must be a handle from this library, or NULL.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_system_free(sys: *mut KdvlabSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// Slow dimension of a system; 0 for NULL.
///
/// # Safety
/// `sys` must be valid or NULL.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_system_slow_dim(sys: *const KdvlabSystem) -> usize {
    sys.as_ref().map_or(0, |s| s.0.slow_dim())
}

/// Averaged drift `<F>`, covariance `<A>` and its symmetric square root at
/// one point of the action octant, by tensor/lattice angle quadrature with
/// `nodes` nodes per angle. `drift_out` holds `m` doubles; `cov_out` and
/// `sqrt_out` hold `m*m` doubles row-major (each may be NULL to skip).
///
/// # Safety
/// `sys` must be valid; `actions` must hold `m` doubles; non-NULL output
/// buffers must have the documented sizes.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_averaged_coefficients(
    sys: *const KdvlabSystem,
    actions: *const f64,
    m: usize,
    nodes: usize,
    drift_out: *mut f64,
    cov_out: *mut f64,
    sqrt_out: *mut f64,
) -> KdvlabStatus {
    let (Some(sys), false) = (sys.as_ref(), actions.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "sys or actions is NULL");
    };
    let actions = std::slice::from_raw_parts(actions, m);
    let quad = QuadratureConfig {
        nodes_per_angle: nodes.max(2),
        ..QuadratureConfig::default()
    };
    match averaged_coefficients(sys.0.as_ref(), actions, &quad) {
        Ok(coeffs) => {
            if !drift_out.is_null() {
                std::ptr::copy_nonoverlapping(coeffs.drift.as_ptr(), drift_out, m);
            }
            for i in 0..m {
                for j in 0..m {
                    if !cov_out.is_null() {
                        *cov_out.add(i * m + j) = coeffs.covariance[(i, j)];
                    }
                    if !sqrt_out.is_null() {
                        *sqrt_out.add(i * m + j) = coeffs.sqrt_covariance[(i, j)];
                    }
                }
            }
            KdvlabStatus::Ok
        }
        Err(e) => averaging_error(e),
    }
}

/// Determinant of the frequency-map Jacobian at the given actions.
///
/// # Safety
/// `sys` must be valid; `actions` must hold `m` doubles; `out` must be
/// valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_frequency_jacobian_det(
    sys: *const KdvlabSystem,
    actions: *const f64,
    m: usize,
    out: *mut f64,
) -> KdvlabStatus {
    let (Some(sys), false) = (sys.as_ref(), actions.is_null() || out.is_null()) else {
        return fail(KdvlabStatus::NullPointer, "sys, actions, or out is NULL");
    };
    if sys.0.slow_dim() != m {
        return fail(
            KdvlabStatus::InvalidArgument,
            format!("system has {} slow modes, got {m}", sys.0.slow_dim()),
        );
    }
    let actions = std::slice::from_raw_parts(actions, m);
    *out = frequency_jacobian_det(sys.0.as_ref(), actions);
    KdvlabStatus::Ok
}

/// Euler-Maruyama fast-slow path; writes the final actions and angles
/// (each `m` doubles) and the boundary-clamp event count.
///
/// # Safety
/// `sys` must be valid; `actions0`, `angles0` must hold `m` doubles;
/// non-NULL outputs must have the documented sizes.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn kdvlab_simulate_fast_slow_final(
    sys: *const KdvlabSystem,
    nu: f64,
    actions0: *const f64,
    angles0: *const f64,
    m: usize,
    t_slow: f64,
    dt: f64,
    seed: u64,
    stream: u64,
    actions_out: *mut f64,
    angles_out: *mut f64,
    clamp_events_out: *mut u64,
) -> KdvlabStatus {
    let Some(sys) = sys.as_ref() else {
        return fail(KdvlabStatus::NullPointer, "sys is NULL");
    };
    if actions0.is_null() || angles0.is_null() {
        return fail(KdvlabStatus::NullPointer, "actions0 or angles0 is NULL");
    }
    let actions0 = std::slice::from_raw_parts(actions0, m);
    let angles0 = std::slice::from_raw_parts(angles0, m);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    match simulate_fast_slow(
        sys.0.as_ref(),
        nu,
        actions0,
        angles0,
        t_slow,
        dt,
        &mut rng,
        usize::MAX,
    ) {
        Ok(path) => {
            if !actions_out.is_null() {
                std::ptr::copy_nonoverlapping(path.final_actions().as_ptr(), actions_out, m);
            }
            if !angles_out.is_null() {
                let angles = path.angles.last().expect("path has records");
                std::ptr::copy_nonoverlapping(angles.as_ptr(), angles_out, m);
            }
            if !clamp_events_out.is_null() {
                *clamp_events_out = path.clamp_events as u64;
            }
            KdvlabStatus::Ok
        }
        Err(e) => averaging_error(e),
    }
}

/// Euler-Maruyama path of the averaged (Whitham) equation using the
/// system's closed-form averaged coefficients; writes the final actions.
/// Fails with `InvalidArgument` when the system carries no closed forms.
///
/// # Safety
/// `sys` must be valid; `actions0` must hold `m` doubles; `actions_out`
/// must hold `m` doubles.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_simulate_whitham_final(
    sys: *const KdvlabSystem,
    actions0: *const f64,
    m: usize,
    t_slow: f64,
    dt: f64,
    seed: u64,
    stream: u64,
    actions_out: *mut f64,
) -> KdvlabStatus {
    let Some(sys) = sys.as_ref() else {
        return fail(KdvlabStatus::NullPointer, "sys is NULL");
    };
    if actions0.is_null() || actions_out.is_null() {
        return fail(KdvlabStatus::NullPointer, "actions0 or actions_out is NULL");
    }
    let Some(provider) = ClosedFormAveraged::new(sys.0.as_ref()) else {
        return fail(
            KdvlabStatus::InvalidArgument,
            "system has no closed-form averaged coefficients",
        );
    };
    let actions0 = std::slice::from_raw_parts(actions0, m);
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    match simulate_whitham(&provider, actions0, t_slow, dt, &mut rng, usize::MAX) {
        Ok(path) => {
            std::ptr::copy_nonoverlapping(path.final_actions().as_ptr(), actions_out, m);
            KdvlabStatus::Ok
        }
        Err(e) => averaging_error(e),
    }
}

// ---------------------------------------------------------------------------
// Statistics helpers
// ---------------------------------------------------------------------------

/// Two-sample Kolmogorov-Smirnov statistic.
///
/// # Safety
/// `a` and `b` must hold `na` and `nb` doubles; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_ks_two_sample(
    a: *const f64,
    na: usize,
    b: *const f64,
    nb: usize,
    out: *mut f64,
) -> KdvlabStatus {
    if a.is_null() || b.is_null() || out.is_null() {
        return fail(KdvlabStatus::NullPointer, "a, b, or out is NULL");
    }
    let a = std::slice::from_raw_parts(a, na);
    let b = std::slice::from_raw_parts(b, nb);
    match stats::ks_two_sample(a, b) {
        Ok(d) => {
            *out = d;
            KdvlabStatus::Ok
        }
        Err(e) => fail(KdvlabStatus::InvalidArgument, e.to_string()),
    }
}

/// Magnitude of the first circular moment of an angle sample; 0 for an
/// empty sample.
///
/// # Safety
/// `angles` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn kdvlab_circular_first_moment(angles: *const f64, n: usize) -> f64 {
    if angles.is_null() {
        return f64::NAN;
    }
    let angles = std::slice::from_raw_parts(angles, n);
    stats::circular_first_moment(angles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_round_trip_through_abi() {
        unsafe {
            let mut field: *mut KdvlabField = std::ptr::null_mut();
            assert_eq!(kdvlab_field_new(8, 0, &mut field), KdvlabStatus::Ok);
            assert_eq!(kdvlab_field_set_mode(field, 1, 1.0), KdvlabStatus::Ok);
            assert_eq!(
                kdvlab_field_set_mode(field, 0, 1.0),
                KdvlabStatus::InvalidArgument
            );
            let mut msg = vec![0i8; 128];
            let len = kdvlab_last_error_message(msg.as_mut_ptr(), msg.len());
            assert!(len > 0);

            let mut norm = 0.0;
            assert_eq!(
                kdvlab_field_sobolev_norm(field, 0, &mut norm),
                KdvlabStatus::Ok
            );
            assert!((norm - 1.0).abs() < 1e-14);

            let mut j0 = 0.0;
            assert_eq!(kdvlab_j_functional(field, 0, &mut j0), KdvlabStatus::Ok);
            assert!((j0 - 1.0).abs() < 1e-14);

            let mut v: *mut KdvlabField = std::ptr::null_mut();
            assert_eq!(kdvlab_kdv_vector_field(field, &mut v), KdvlabStatus::Ok);
            let mut c = 0.0;
            assert_eq!(kdvlab_field_coefficient(v, -2, &mut c), KdvlabStatus::Ok);
            assert!((c - 3.0).abs() < 1e-12);

            kdvlab_field_free(v);
            kdvlab_field_free(field);
        }
    }

    #[test]
    fn spde_stream_determinism_through_abi() {
        unsafe {
            let mut field: *mut KdvlabField = std::ptr::null_mut();
            kdvlab_field_new(8, 0, &mut field);
            kdvlab_field_set_mode(field, 1, 0.3);

            let run = |stream: u64| -> f64 {
                let mut sim: *mut KdvlabSpdeSim = std::ptr::null_mut();
                assert_eq!(
                    kdvlab_spde_new(field, 0.1, 1e-3, 3.0, 1.0, 42, stream, &mut sim),
                    KdvlabStatus::Ok
                );
                assert_eq!(kdvlab_spde_advance(sim, 100), KdvlabStatus::Ok);
                assert!((kdvlab_spde_time(sim) - 0.1).abs() < 1e-12);
                let mut snapshot: *mut KdvlabField = std::ptr::null_mut();
                assert_eq!(kdvlab_spde_state(sim, &mut snapshot), KdvlabStatus::Ok);
                let mut norm = 0.0;
                kdvlab_field_sobolev_norm(snapshot, 0, &mut norm);
                kdvlab_field_free(snapshot);
                kdvlab_spde_free(sim);
                norm
            };
            assert_eq!(run(0), run(0));
            assert_ne!(run(0), run(1));
            kdvlab_field_free(field);
        }
    }

    #[test]
    fn hill_and_actions_through_abi() {
        unsafe {
            let mut field: *mut KdvlabField = std::ptr::null_mut();
            kdvlab_field_new(4, 0, &mut field);
            kdvlab_field_set_mode(field, 1, 0.05);

            let mut edges = vec![0.0f64; 9];
            let mut gaps = vec![0.0f64; 4];
            assert_eq!(
                kdvlab_hill_band_edges(field, 4, 16, edges.as_mut_ptr(), gaps.as_mut_ptr()),
                KdvlabStatus::Ok
            );
            assert!((gaps[0] - 0.05).abs() < 0.003);

            // undersized truncation reports the dedicated status
            assert_eq!(
                kdvlab_hill_band_edges(field, 4, 8, std::ptr::null_mut(), std::ptr::null_mut()),
                KdvlabStatus::Truncation
            );

            let mut actions = vec![0.0f64; 2];
            assert_eq!(
                kdvlab_linearized_actions(field, 2, actions.as_mut_ptr()),
                KdvlabStatus::Ok
            );
            assert!((actions[0] - 0.00125).abs() < 1e-12);

            let mut gap_actions = vec![0.0f64; 4];
            assert_eq!(
                kdvlab_hill_gap_actions(field, 4, 16, gap_actions.as_mut_ptr()),
                KdvlabStatus::Ok
            );
            assert!((gap_actions[0] - actions[0]).abs() / actions[0] < 0.05);

            kdvlab_field_free(field);
        }
    }

    #[test]
    fn averaging_through_abi() {
        unsafe {
            let b = [1.0f64, 0.8];
            let mut sys: *mut KdvlabSystem = std::ptr::null_mut();
            assert_eq!(
                kdvlab_system_rotating_ou(2, b.as_ptr(), std::ptr::null(), &mut sys),
                KdvlabStatus::Ok
            );
            assert_eq!(kdvlab_system_slow_dim(sys), 2);

            let actions = [0.5f64, 0.5];
            let mut drift = [0.0f64; 2];
            let mut cov = [0.0f64; 4];
            assert_eq!(
                kdvlab_averaged_coefficients(
                    sys,
                    actions.as_ptr(),
                    2,
                    16,
                    drift.as_mut_ptr(),
                    cov.as_mut_ptr(),
                    std::ptr::null_mut()
                ),
                KdvlabStatus::Ok
            );
            assert!((drift[0] - 0.0).abs() < 1e-10);
            assert!((cov[0] - 1.0).abs() < 1e-10);

            let mut det = 0.0;
            assert_eq!(
                kdvlab_frequency_jacobian_det(sys, actions.as_ptr(), 2, &mut det),
                KdvlabStatus::Ok
            );
            assert!(det.abs() < 1e-9);

            let angles = [0.0f64, 0.0];
            let mut final_actions = [0.0f64; 2];
            let mut clamps = 0u64;
            assert_eq!(
                kdvlab_simulate_fast_slow_final(
                    sys,
                    0.2,
                    actions.as_ptr(),
                    angles.as_ptr(),
                    2,
                    1.0,
                    0.01,
                    7,
                    0,
                    final_actions.as_mut_ptr(),
                    std::ptr::null_mut(),
                    &mut clamps
                ),
                KdvlabStatus::Ok
            );
            assert!(final_actions.iter().all(|v| v.is_finite() && *v >= 0.0));

            let mut whitham_final = [0.0f64; 2];
            assert_eq!(
                kdvlab_simulate_whitham_final(
                    sys,
                    actions.as_ptr(),
                    2,
                    1.0,
                    0.01,
                    7,
                    0,
                    whitham_final.as_mut_ptr()
                ),
                KdvlabStatus::Ok
            );

            kdvlab_system_free(sys);
        }
    }
}
