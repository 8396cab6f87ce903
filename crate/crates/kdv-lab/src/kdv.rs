//! Deterministic KdV flow and the damped-driven stochastic integrator.
//!
//! The flow is advanced in the spectral representation. Writing the state as
//! exponential coefficients `c_k = (u_k - i u_{-k})/2`, the linear part
//! `-u_xxx + nu u_xx` acts diagonally as `lambda_k = i k^3 - nu k^2` and is
//! applied exactly through an integrating factor; the nonlinearity
//! `6 u u_x = 3 (u^2)_x` is evaluated pseudo-spectrally with the dealiased
//! square and treated explicitly (classical RK4 stages for the transformed
//! equation). The additive noise enters as a plain Euler-Maruyama increment,
//! which is all the weak-sense statistics downstream require.

use std::sync::Arc;

use rand::Rng;
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::conserved::j_functional;
use crate::error::SolverError;
use crate::fourier::{fmt_float, SpectralField};
use crate::hill;
use crate::noise::NoiseSpec;

/// Complex type of the integrator's exponential state vectors.
pub use rustfft::num_complex::Complex64 as StateComplex;

/// Hard stop on `||u||_0`; trajectories beyond this signal a misconfigured
/// run rather than physics.
pub const BLOWUP_GUARD_NORM0: f64 = 1e3;

/// Default step size heuristic for the explicit nonlinear stages.
pub fn default_dt(k_max: usize) -> f64 {
    (0.5 / k_max as f64).min(1e-3)
}

/// Time-stepping scheme for [`step_spde`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Integrating-factor RK4 for drift; the stochastic increment is added
    /// after the deterministic stage (degenerates exactly to the unperturbed
    /// stepper when `nu = 0` and the forcing vanishes).
    #[default]
    ImexExponential,
    /// Lie splitting: RK4 substep of the pure nonlinearity, then the exact
    /// linear propagator, then the stochastic increment.
    ExplicitRkSplit,
}

/// Stochastic stepper configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SdeStepperConfig {
    /// Time step in original time `t`.
    pub dt: f64,
    pub scheme: Scheme,
    /// Damping/forcing parameter; `0` degenerates to the unperturbed flow.
    pub nu: f64,
}

impl SdeStepperConfig {
    pub fn new(dt: f64, nu: f64) -> Result<Self, SolverError> {
        let cfg = SdeStepperConfig {
            dt,
            scheme: Scheme::ImexExponential,
            nu,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(SolverError::InvalidConfig(format!(
                "dt must be positive and finite, got {}",
                self.dt
            )));
        }
        if !(0.0..=1.0).contains(&self.nu) {
            return Err(SolverError::InvalidConfig(format!(
                "nu must lie in [0, 1], got {}",
                self.nu
            )));
        }
        Ok(())
    }
}

/// KdV vector field `V(u) = u_xxx - 6 u u_x`, evaluated as
/// `u_xxx - 3 (u^2)_x` with the dealiased square. The result is zero-mean by
/// construction (the derivative annihilates the constant component of the
/// square).
pub fn kdv_vector_field(u: &SpectralField) -> SpectralField {
    let dispersive = u.derivative(3);
    let square = u
        .pointwise_product(u)
        .expect("square of a field against itself always has matching cutoff");
    let nonlinear = square.field.derivative(1).scale(3.0);
    dispersive
        .add(&nonlinear.scale(-1.0))
        .expect("cutoffs match by construction")
}

/// Reusable spectral workspace: FFT plans, propagators, and stage buffers
/// for one `(K, N, nu)` configuration.
pub struct KdvIntegrator {
    k_max: usize,
    n_grid: usize,
    nu: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    grid: Vec<Complex64>,
    half_prop: Vec<Complex64>,
    full_prop: Vec<Complex64>,
    prop_dt: f64,
    stage: Vec<Complex64>,
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    noise_cos: Vec<f64>,
    noise_sin: Vec<f64>,
}

impl KdvIntegrator {
    pub fn new(k_max: usize, n_grid: usize, nu: f64) -> Self {
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n_grid);
        let inv = planner.plan_fft_inverse(n_grid);
        KdvIntegrator {
            k_max,
            n_grid,
            nu,
            fwd,
            inv,
            grid: vec![Complex64::default(); n_grid],
            half_prop: vec![Complex64::default(); k_max + 1],
            full_prop: vec![Complex64::default(); k_max + 1],
            prop_dt: f64::NAN,
            stage: vec![Complex64::default(); k_max + 1],
            k1: vec![Complex64::default(); k_max + 1],
            k2: vec![Complex64::default(); k_max + 1],
            k3: vec![Complex64::default(); k_max + 1],
            k4: vec![Complex64::default(); k_max + 1],
            noise_cos: vec![0.0; k_max],
            noise_sin: vec![0.0; k_max],
        }
    }

    pub fn for_field(u: &SpectralField, nu: f64) -> Self {
        Self::new(u.k_max(), u.n_grid(), nu)
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    /// Exponential state `c_k = (u_k - i u_{-k}) / 2`, `k = 0..=K` with
    /// `c_0 = 0`.
    pub fn state_from_field(&self, u: &SpectralField) -> Vec<Complex64> {
        let mut c = vec![Complex64::default(); self.k_max + 1];
        for j in 0..self.k_max {
            c[j + 1] = Complex64::new(
                u.cos_coefficients()[j] * 0.5,
                -u.sin_coefficients()[j] * 0.5,
            );
        }
        c
    }

    pub fn field_from_state(&self, c: &[Complex64]) -> SpectralField {
        let mut u = SpectralField::zeros_with_grid(self.k_max, self.n_grid)
            .expect("integrator grid is validated at construction");
        for j in 0..self.k_max {
            u.set_coefficient((j + 1) as i64, 2.0 * c[j + 1].re).unwrap();
            u.set_coefficient(-((j + 1) as i64), -2.0 * c[j + 1].im).unwrap();
        }
        u
    }

    /// `||u||_m^2` from the exponential state.
    pub fn norm_sq(&self, c: &[Complex64], m: usize) -> f64 {
        let mut sum = 0.0;
        for k in 1..=self.k_max {
            let w = (k as f64).powi(2 * m as i32);
            sum += w * c[k].norm_sqr();
        }
        4.0 * sum
    }

    fn ensure_propagators(&mut self, dt: f64) {
        if self.prop_dt == dt {
            return;
        }
        for k in 0..=self.k_max {
            let kf = k as f64;
            // lambda_k = i k^3 - nu k^2 acting on e^{ikx}
            let decay = (-self.nu * kf * kf * 0.5 * dt).exp();
            let phase = kf * kf * kf * 0.5 * dt;
            let half = Complex64::from_polar(decay, phase);
            self.half_prop[k] = half;
            self.full_prop[k] = half * half;
        }
        self.prop_dt = dt;
    }

    /// Nonlinearity `6 u u_x` in exponential coefficients:
    /// `out_k = 3 i k (u^2)_k`, dealiased by truncation on the `N`-point
    /// grid.
    fn nonlinearity(&mut self, c: &[Complex64], out: &mut [Complex64]) {
        let n = self.n_grid;
        self.grid.fill(Complex64::default());
        for k in 1..=self.k_max {
            self.grid[k] = c[k];
            self.grid[n - k] = c[k].conj();
        }
        self.inv.process(&mut self.grid);
        for z in self.grid.iter_mut() {
            *z = Complex64::new(z.re * z.re, 0.0);
        }
        self.fwd.process(&mut self.grid);
        let scale = 1.0 / n as f64;
        out[0] = Complex64::default();
        for k in 1..=self.k_max {
            let sq_k = self.grid[k] * scale;
            out[k] = Complex64::new(0.0, 3.0 * k as f64) * sq_k;
        }
    }

    /// One integrating-factor RK4 step of `du/dt = L u + 6 u u_x` with
    /// `L = -dxxx + nu dxx`.
    pub fn step_ifrk4(&mut self, c: &mut [Complex64], dt: f64) {
        self.ensure_propagators(dt);
        let k_max = self.k_max;
        let h = dt;

        let mut k1 = std::mem::take(&mut self.k1);
        let mut k2 = std::mem::take(&mut self.k2);
        let mut k3 = std::mem::take(&mut self.k3);
        let mut k4 = std::mem::take(&mut self.k4);
        let mut stage = std::mem::take(&mut self.stage);

        self.nonlinearity(c, &mut k1);

        for k in 0..=k_max {
            stage[k] = self.half_prop[k] * (c[k] + 0.5 * h * k1[k]);
        }
        self.nonlinearity(&stage, &mut k2);

        for k in 0..=k_max {
            stage[k] = self.half_prop[k] * c[k] + 0.5 * h * k2[k];
        }
        self.nonlinearity(&stage, &mut k3);

        for k in 0..=k_max {
            stage[k] = self.full_prop[k] * c[k] + h * self.half_prop[k] * k3[k];
        }
        self.nonlinearity(&stage, &mut k4);

        for k in 0..=k_max {
            c[k] = self.full_prop[k] * c[k]
                + (h / 6.0)
                    * (self.full_prop[k] * k1[k]
                        + 2.0 * self.half_prop[k] * (k2[k] + k3[k])
                        + k4[k]);
        }

        self.k1 = k1;
        self.k2 = k2;
        self.k3 = k3;
        self.k4 = k4;
        self.stage = stage;
    }

    /// One Lie-split step: RK4 on the pure nonlinearity, then the exact
    /// linear propagator.
    pub fn step_split(&mut self, c: &mut [Complex64], dt: f64) {
        self.ensure_propagators(dt);
        let k_max = self.k_max;
        let h = dt;

        let mut k1 = std::mem::take(&mut self.k1);
        let mut k2 = std::mem::take(&mut self.k2);
        let mut k3 = std::mem::take(&mut self.k3);
        let mut k4 = std::mem::take(&mut self.k4);
        let mut stage = std::mem::take(&mut self.stage);

        self.nonlinearity(c, &mut k1);
        for k in 0..=k_max {
            stage[k] = c[k] + 0.5 * h * k1[k];
        }
        self.nonlinearity(&stage, &mut k2);
        for k in 0..=k_max {
            stage[k] = c[k] + 0.5 * h * k2[k];
        }
        self.nonlinearity(&stage, &mut k3);
        for k in 0..=k_max {
            stage[k] = c[k] + h * k3[k];
        }
        self.nonlinearity(&stage, &mut k4);
        for k in 0..=k_max {
            let drifted = c[k] + (h / 6.0) * (k1[k] + 2.0 * (k2[k] + k3[k]) + k4[k]);
            c[k] = self.full_prop[k] * drifted;
        }

        self.k1 = k1;
        self.k2 = k2;
        self.k3 = k3;
        self.k4 = k4;
        self.stage = stage;
    }

    /// Add `sqrt(nu) * sum_s b_s xi_s sqrt(dt) e_s` to the state.
    pub fn add_noise<R: Rng>(&mut self, c: &mut [Complex64], spec: &NoiseSpec, dt: f64, rng: &mut R) {
        debug_assert_eq!(spec.k_max(), self.k_max);
        let sqrt_nu = self.nu.sqrt();
        spec.sample_increment_into(dt, rng, &mut self.noise_cos, &mut self.noise_sin);
        for j in 0..self.k_max {
            c[j + 1] += Complex64::new(
                sqrt_nu * self.noise_cos[j] * 0.5,
                -sqrt_nu * self.noise_sin[j] * 0.5,
            );
        }
    }

    /// Finiteness and blow-up guard check; `t` only labels the error.
    pub fn check_state(&self, c: &[Complex64], t: f64) -> Result<(), SolverError> {
        let norm0_sq = self.norm_sq(c, 0);
        if !norm0_sq.is_finite() {
            return Err(SolverError::NonFinite {
                t,
                detail: "non-finite coefficient".to_string(),
            });
        }
        if norm0_sq > BLOWUP_GUARD_NORM0 * BLOWUP_GUARD_NORM0 {
            return Err(SolverError::NonFinite {
                t,
                detail: format!(
                    "blow-up guard tripped: ||u||_0 = {:.3e} > {BLOWUP_GUARD_NORM0:.0e}",
                    norm0_sq.sqrt()
                ),
            });
        }
        Ok(())
    }
}

/// One step of the unperturbed KdV flow (`u_xxx` exact in Fourier space,
/// nonlinearity by explicit RK4 stages).
pub fn step_deterministic(u: &SpectralField, dt: f64) -> Result<SpectralField, SolverError> {
    let mut integ = KdvIntegrator::for_field(u, 0.0);
    let mut c = integ.state_from_field(u);
    integ.step_ifrk4(&mut c, dt);
    integ.check_state(&c, dt)?;
    Ok(integ.field_from_state(&c))
}

/// One step of the damped-driven equation.
pub fn step_spde<R: Rng>(
    u: &SpectralField,
    cfg: &SdeStepperConfig,
    spec: &NoiseSpec,
    rng: &mut R,
) -> Result<SpectralField, SolverError> {
    cfg.validate()?;
    let mut integ = KdvIntegrator::for_field(u, cfg.nu);
    let mut c = integ.state_from_field(u);
    match cfg.scheme {
        Scheme::ImexExponential => integ.step_ifrk4(&mut c, cfg.dt),
        Scheme::ExplicitRkSplit => integ.step_split(&mut c, cfg.dt),
    }
    integ.add_noise(&mut c, spec, cfg.dt, rng);
    integ.check_state(&c, cfg.dt)?;
    Ok(integ.field_from_state(&c))
}

/// What to record along a trajectory.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ObserverConfig {
    /// Number of observation intervals; `n + 1` rows are recorded including
    /// the initial state.
    pub n_observations: usize,
    /// Number of leading action/angle modes to track.
    pub m_obs: usize,
    /// When set, actions come from the Hill spectral gaps; otherwise from
    /// the linearized coordinate map.
    pub hill: Option<HillObserver>,
    /// Threshold on `u_k^2 + u_{-k}^2` below which the mode's angle is
    /// recorded as undefined.
    pub angle_floor: f64,
    /// When set, accumulate the running time average of `||u||_1^2` over
    /// steps with `t >= value` (a stationary-balance diagnostic).
    pub energy_window_start: Option<f64>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct HillObserver {
    pub k_spec: usize,
    pub m_trunc: usize,
}

impl ObserverConfig {
    pub fn norms_only(n_observations: usize) -> Self {
        ObserverConfig {
            n_observations,
            m_obs: 0,
            hill: None,
            angle_floor: hill::DEFAULT_ANGLE_FLOOR,
            energy_window_start: None,
        }
    }

    pub fn with_linearized_actions(n_observations: usize, m_obs: usize) -> Self {
        ObserverConfig {
            m_obs,
            ..Self::norms_only(n_observations)
        }
    }

    pub fn with_hill_actions(
        n_observations: usize,
        m_obs: usize,
        k_spec: usize,
        m_trunc: usize,
    ) -> Self {
        ObserverConfig {
            m_obs,
            hill: Some(HillObserver { k_spec, m_trunc }),
            ..Self::norms_only(n_observations)
        }
    }
}

/// Observables sampled along one trajectory. `tau = nu * t` is the slow
/// time.
#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    pub norm0: Vec<f64>,
    pub norm1: Vec<f64>,
    pub norm2: Vec<f64>,
    pub j0: Vec<f64>,
    pub j1: Vec<f64>,
    pub j2: Vec<f64>,
    /// Row-per-observation action vectors `I_1..I_m`.
    pub actions: Vec<Vec<f64>>,
    /// Row-per-observation angle vectors `phi_1..phi_m`; undefined angles
    /// are `NaN`.
    pub angles: Vec<Vec<f64>>,
    pub m_obs: usize,
    /// Count of (observation, mode) slots whose angle was undefined.
    pub undefined_angles: usize,
    /// Mean of `||u||_1^2` over integration steps inside the configured
    /// energy window, if one was configured.
    pub energy_window_mean_norm1_sq: Option<f64>,
    /// State at the final observation time.
    pub final_state: SpectralField,
}

impl TrajectoryRecord {
    /// CSV with the pinned column layout
    /// `t,tau,norm0,norm1,norm2,J0,J1,J2,I_1..,phi_1..`.
    pub fn to_csv(&self) -> String {
        let mut header = String::from("t,tau,norm0,norm1,norm2,J0,J1,J2");
        for k in 1..=self.m_obs {
            header.push_str(&format!(",I_{k}"));
        }
        for k in 1..=self.m_obs {
            header.push_str(&format!(",phi_{k}"));
        }
        header.push('\n');
        let mut out = header;
        for i in 0..self.t.len() {
            let mut row = vec![
                fmt_float(self.t[i]),
                fmt_float(self.tau[i]),
                fmt_float(self.norm0[i]),
                fmt_float(self.norm1[i]),
                fmt_float(self.norm2[i]),
                fmt_float(self.j0[i]),
                fmt_float(self.j1[i]),
                fmt_float(self.j2[i]),
            ];
            for k in 0..self.m_obs {
                row.push(fmt_float(self.actions[i][k]));
            }
            for k in 0..self.m_obs {
                row.push(fmt_float(self.angles[i][k]));
            }
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }
}

/// Integrate the damped-driven equation over `[0, t_final]`, sampling
/// observables at (approximately) evenly spaced times. `t_final = 0` records
/// only the initial observation. Observation times snap to the step grid;
/// the step count is `ceil(t_final / cfg.dt)` so the effective step never
/// exceeds the configured one.
pub fn integrate_path<R: Rng>(
    u0: &SpectralField,
    t_final: f64,
    cfg: &SdeStepperConfig,
    spec: &NoiseSpec,
    rng: &mut R,
    observers: &ObserverConfig,
) -> Result<TrajectoryRecord, SolverError> {
    cfg.validate()?;
    if t_final < 0.0 {
        return Err(SolverError::InvalidConfig(format!(
            "t_final must be non-negative, got {t_final}"
        )));
    }
    if observers.m_obs > u0.k_max() {
        return Err(SolverError::InvalidConfig(format!(
            "m_obs = {} exceeds cutoff K = {}",
            observers.m_obs,
            u0.k_max()
        )));
    }

    let mut integ = KdvIntegrator::for_field(u0, cfg.nu);
    let mut c = integ.state_from_field(u0);

    let n_steps = if t_final == 0.0 {
        0
    } else {
        (t_final / cfg.dt).ceil() as usize
    };
    let dt_eff = if n_steps == 0 { cfg.dt } else { t_final / n_steps as f64 };

    // Observation step indices (deduplicated, always including 0 and the end)
    let n_obs = observers.n_observations.max(1);
    let mut obs_steps: Vec<usize> = (0..=n_obs)
        .map(|i| ((i as f64 / n_obs as f64) * n_steps as f64).round() as usize)
        .collect();
    obs_steps.dedup();

    let mut record = TrajectoryRecord {
        t: Vec::new(),
        tau: Vec::new(),
        norm0: Vec::new(),
        norm1: Vec::new(),
        norm2: Vec::new(),
        j0: Vec::new(),
        j1: Vec::new(),
        j2: Vec::new(),
        actions: Vec::new(),
        angles: Vec::new(),
        m_obs: observers.m_obs,
        undefined_angles: 0,
        energy_window_mean_norm1_sq: None,
        final_state: u0.clone(),
    };

    let mut energy_sum = 0.0;
    let mut energy_count = 0usize;

    let mut next_obs = 0usize;
    observe(&integ, &c, 0.0, cfg.nu, observers, &mut record)?;
    next_obs += 1;

    for step in 1..=n_steps {
        match cfg.scheme {
            Scheme::ImexExponential => integ.step_ifrk4(&mut c, dt_eff),
            Scheme::ExplicitRkSplit => integ.step_split(&mut c, dt_eff),
        }
        integ.add_noise(&mut c, spec, dt_eff, rng);
        let t = step as f64 * dt_eff;
        integ.check_state(&c, t)?;

        if let Some(window_start) = observers.energy_window_start {
            if t >= window_start {
                energy_sum += integ.norm_sq(&c, 1);
                energy_count += 1;
            }
        }

        while next_obs < obs_steps.len() && obs_steps[next_obs] == step {
            observe(&integ, &c, t, cfg.nu, observers, &mut record)?;
            next_obs += 1;
        }
    }

    if energy_count > 0 {
        record.energy_window_mean_norm1_sq = Some(energy_sum / energy_count as f64);
    }
    record.final_state = integ.field_from_state(&c);
    Ok(record)
}

fn observe(
    integ: &KdvIntegrator,
    c: &[Complex64],
    t: f64,
    nu: f64,
    observers: &ObserverConfig,
    record: &mut TrajectoryRecord,
) -> Result<(), SolverError> {
    let u = integ.field_from_state(c);
    record.t.push(t);
    record.tau.push(nu * t);
    record.norm0.push(u.sobolev_norm(0));
    record.norm1.push(u.sobolev_norm(1));
    record.norm2.push(u.sobolev_norm(2));
    record.j0.push(j_functional(&u, 0)?);
    record.j1.push(j_functional(&u, 1)?);
    record.j2.push(j_functional(&u, 2)?);

    let m = observers.m_obs;
    if m > 0 {
        let actions = match observers.hill {
            Some(h) => {
                let spectrum = hill::band_edges(&u, h.k_spec, h.m_trunc).map_err(|e| {
                    SolverError::InvalidConfig(format!("hill observer failed at t = {t}: {e}"))
                })?;
                let state = hill::actions_from_gaps(&spectrum);
                state.actions[..m].to_vec()
            }
            None => hill::linearized_actions(&u, m)
                .expect("m_obs <= K checked above")
                .actions,
        };
        let angle_state = hill::linearized_angles(&u, m, observers.angle_floor)
            .expect("m_obs <= K checked above");
        let mut angles = Vec::with_capacity(m);
        for k in 0..m {
            if angle_state.angle_defined[k] {
                angles.push(angle_state.angles[k]);
            } else {
                angles.push(f64::NAN);
                record.undefined_angles += 1;
            }
        }
        record.actions.push(actions);
        record.angles.push(angles);
    } else {
        record.actions.push(Vec::new());
        record.angles.push(Vec::new());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn norm0_diff(a: &SpectralField, b: &SpectralField) -> f64 {
        a.add(&b.scale(-1.0)).unwrap().sobolev_norm(0)
    }

    #[test]
    fn vector_field_analytic() {
        // V(0) = 0
        let z = SpectralField::zeros(8);
        assert_eq!(kdv_vector_field(&z).sobolev_norm(0), 0.0);

        // V(cos x) = sin x + 3 sin 2x
        let f = SpectralField::from_modes(&[(1, 1.0)], 8).unwrap();
        let v = kdv_vector_field(&f);
        assert_abs_diff_eq!(v.coefficient(-1).unwrap(), 1.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v.coefficient(-2).unwrap(), 3.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v.coefficient(1).unwrap(), 0.0, epsilon = 1e-13);
        assert_abs_diff_eq!(v.coefficient(2).unwrap(), 0.0, epsilon = 1e-13);

        // V(a cos x) = a sin x + 3 a^2 sin 2x
        let a = 0.37;
        let fa = SpectralField::from_modes(&[(1, a)], 8).unwrap();
        let va = kdv_vector_field(&fa);
        assert_abs_diff_eq!(va.coefficient(-1).unwrap(), a, epsilon = 1e-13);
        assert_abs_diff_eq!(va.coefficient(-2).unwrap(), 3.0 * a * a, epsilon = 1e-13);
    }

    #[test]
    fn zero_is_equilibrium() {
        let z = SpectralField::zeros(8);
        let stepped = step_deterministic(&z, 1e-2).unwrap();
        assert_eq!(stepped.sobolev_norm(0), 0.0);
    }

    /// L2 norm conservation over t in [0, 1] at the acceptance resolution.
    #[test]
    fn l2_conservation_cosine() {
        let u0 = SpectralField::from_modes(&[(1, 1.0)], 64).unwrap();
        let mut integ = KdvIntegrator::for_field(&u0, 0.0);
        let mut c = integ.state_from_field(&u0);
        let dt = 1e-3;
        for _ in 0..1000 {
            integ.step_ifrk4(&mut c, dt);
        }
        let norm = integ.norm_sq(&c, 0).sqrt();
        assert!(
            (norm - 1.0).abs() < 1e-8,
            "||u(1)||_0 = {norm}, expected 1 within 1e-8"
        );
    }

    /// Richardson-style consistency: (u(dt) - u)/dt approaches -V(u) at
    /// first order as dt shrinks.
    #[test]
    fn single_step_consistency() {
        let u = SpectralField::from_modes(&[(1, 0.5), (-2, 0.25)], 32).unwrap();
        let v = kdv_vector_field(&u);
        let residual = |dt: f64| -> f64 {
            let stepped = step_deterministic(&u, dt).unwrap();
            let diff = stepped.add(&u.scale(-1.0)).unwrap().scale(1.0 / dt);
            norm0_diff(&diff, &v.scale(-1.0))
        };
        let r1 = residual(1e-2);
        let r2 = residual(5e-3);
        let r3 = residual(2.5e-3);
        // The quotient differs from -V(u) by (dt/2) u_tt + O(dt^2):
        // first-order decay, ratio ~2 per halving.
        let ratio12 = r1 / r2;
        let ratio23 = r2 / r3;
        assert!(
            (1.7..=2.3).contains(&ratio12) && (1.7..=2.3).contains(&ratio23),
            "expected ~2x decay per halving, got {ratio12:.2}, {ratio23:.2} \
             (residuals {r1:.3e}, {r2:.3e}, {r3:.3e})"
        );
    }

    #[test]
    fn spde_degenerates_to_deterministic() {
        let u = SpectralField::from_modes(&[(1, 0.4), (-3, 0.2)], 16).unwrap();
        let cfg = SdeStepperConfig {
            dt: 1e-3,
            scheme: Scheme::ImexExponential,
            nu: 0.0,
        };
        let spec = NoiseSpec::inverse_power(16, 3.0, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        let via_spde = step_spde(&u, &cfg, &spec, &mut rng).unwrap();
        let via_det = step_deterministic(&u, 1e-3).unwrap();
        assert!(
            norm0_diff(&via_spde, &via_det) < 1e-12,
            "nu = 0 with sqrt(nu)-scaled noise must reproduce the deterministic step"
        );
    }

    #[test]
    fn linear_damping_contracts_mode_one() {
        // Unforced, nu > 0: mode 1 contracts by e^{-nu dt} per step within
        // scheme error (the nonlinearity feeds mode 2 only at O(dt * a^2)).
        let u = SpectralField::from_modes(&[(1, 1.0)], 16).unwrap();
        let nu = 0.5;
        let dt = 1e-3;
        let spec = NoiseSpec::unforced(16);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        for scheme in [Scheme::ImexExponential, Scheme::ExplicitRkSplit] {
            let cfg = SdeStepperConfig { dt, scheme, nu };
            let stepped = step_spde(&u, &cfg, &spec, &mut rng).unwrap();
            let a1 = stepped.coefficient(1).unwrap();
            let expected = (-nu * dt).exp();
            // scheme error: O(dt^2) mode-1 feedback through the excited
            // second mode
            assert!(
                (a1 - expected).abs() < 2e-5,
                "{scheme:?}: mode-1 amplitude {a1} vs e^(-nu dt) = {expected}"
            );
        }
    }

    #[test]
    fn integrate_path_zero_horizon() {
        let u0 = SpectralField::from_modes(&[(1, 0.3)], 16).unwrap();
        let cfg = SdeStepperConfig::new(1e-3, 0.1).unwrap();
        let spec = NoiseSpec::inverse_power(16, 3.0, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(9);
        let rec = integrate_path(
            &u0,
            0.0,
            &cfg,
            &spec,
            &mut rng,
            &ObserverConfig::with_linearized_actions(8, 2),
        )
        .unwrap();
        assert_eq!(rec.t.len(), 1);
        assert_eq!(rec.t[0], 0.0);
        assert_eq!(rec.actions[0].len(), 2);
    }

    #[test]
    fn integrate_path_deterministic_given_seed() {
        let u0 = SpectralField::from_modes(&[(1, 0.3), (-2, 0.15)], 16).unwrap();
        let cfg = SdeStepperConfig::new(1e-3, 0.2).unwrap();
        let spec = NoiseSpec::inverse_power(16, 3.0, 1.0).unwrap();
        let obs = ObserverConfig::with_linearized_actions(5, 2);
        let run = |seed: u64| {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            integrate_path(&u0, 0.5, &cfg, &spec, &mut rng, &obs)
                .unwrap()
                .to_csv()
        };
        assert_eq!(run(11), run(11));
        assert_ne!(run(11), run(12));
    }

    /// Stationary energy balance on a single long path: the time average of
    /// ||u||_1^2 over t in [10/nu, 110/nu] matches B_0 / 2 within 10%
    /// (d/dt E||u||_0^2 = nu(-2 E||u||_1^2 + B_0) vanishes in steady state).
    #[test]
    fn stationary_energy_balance_single_path() {
        let k_max = 16;
        let nu = 0.1;
        let spec = NoiseSpec::inverse_power(k_max, 3.0, 1.0).unwrap();
        let b0 = crate::conserved::noise_constant(&spec, 0);
        let u0 = SpectralField::from_modes(&[(1, 0.3), (-2, 0.15)], k_max).unwrap();
        let cfg = SdeStepperConfig::new(1e-3, nu).unwrap();
        let mut obs = ObserverConfig::norms_only(4);
        obs.energy_window_start = Some(10.0 / nu);
        let mut rng = ChaCha12Rng::seed_from_u64(7_654_321);
        let rec = integrate_path(&u0, 110.0 / nu, &cfg, &spec, &mut rng, &obs).unwrap();
        let avg = rec.energy_window_mean_norm1_sq.unwrap();
        let target = b0 / 2.0;
        assert!(
            (avg - target).abs() < 0.1 * target,
            "time-averaged ||u||_1^2 = {avg:.4}, target B0/2 = {target:.4}"
        );
    }

    /// Ensemble version of the moment-bound sanity check: sup_t ||u||_2 stays
    /// finite and below the blow-up guard for a smooth start at nu = 0.1.
    #[test]
    fn norm2_stays_bounded() {
        let k_max = 16;
        let spec = NoiseSpec::inverse_power(k_max, 3.0, 1.0).unwrap();
        let u0 = SpectralField::from_modes(&[(1, 0.3), (-2, 0.15)], k_max).unwrap();
        let cfg = SdeStepperConfig::new(1e-3, 0.1).unwrap();
        let obs = ObserverConfig::norms_only(50);
        let mut sup = 0.0f64;
        for traj in 0..4u64 {
            let mut rng = ChaCha12Rng::seed_from_u64(100);
            rng.set_stream(traj);
            let rec = integrate_path(&u0, 20.0, &cfg, &spec, &mut rng, &obs).unwrap();
            sup = rec.norm2.iter().fold(sup, |acc, &x| acc.max(x));
        }
        assert!(sup.is_finite());
        assert!(
            sup < BLOWUP_GUARD_NORM0,
            "sup ||u||_2 = {sup} hit the blow-up guard"
        );
    }

    #[test]
    fn split_scheme_converges_to_same_flow() {
        // The Lie-split scheme carries an O(dt) splitting error relative to
        // the integrating-factor scheme; the gap must shrink linearly.
        let u0 = SpectralField::from_modes(&[(1, 0.4), (-2, 0.2)], 16).unwrap();
        let spec = NoiseSpec::unforced(16);
        let run = |scheme: Scheme, dt: f64| {
            let cfg = SdeStepperConfig { dt, scheme, nu: 0.0 };
            let mut rng = ChaCha12Rng::seed_from_u64(0);
            let rec = integrate_path(
                &u0,
                0.2,
                &cfg,
                &spec,
                &mut rng,
                &ObserverConfig::norms_only(1),
            )
            .unwrap();
            rec.final_state
        };
        let gap = |dt: f64| {
            norm0_diff(
                &run(Scheme::ImexExponential, dt),
                &run(Scheme::ExplicitRkSplit, dt),
            )
        };
        let coarse = gap(4e-4);
        let fine = gap(2e-4);
        assert!(coarse < 1e-3, "split scheme too far off: {coarse}");
        assert!(
            fine < 0.7 * coarse,
            "splitting error did not shrink: {coarse} -> {fine}"
        );
    }

    #[test]
    fn trajectory_csv_layout() {
        let u0 = SpectralField::from_modes(&[(1, 0.3)], 8).unwrap();
        let cfg = SdeStepperConfig::new(1e-3, 0.1).unwrap();
        let spec = NoiseSpec::inverse_power(8, 3.0, 1.0).unwrap();
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        let rec = integrate_path(
            &u0,
            0.01,
            &cfg,
            &spec,
            &mut rng,
            &ObserverConfig::with_linearized_actions(2, 2),
        )
        .unwrap();
        let csv = rec.to_csv();
        assert!(csv.starts_with("t,tau,norm0,norm1,norm2,J0,J1,J2,I_1,I_2,phi_1,phi_2\n"));
    }
}
