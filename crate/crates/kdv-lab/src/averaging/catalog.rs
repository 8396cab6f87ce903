//! Built-in slow-fast systems with closed-form averaged coefficients.
//!
//! These exercise every engine code path against exact oracles without
//! requiring the (out-of-scope) full nonlinear coordinate map of the PDE:
//! the theorems under test are dimension-agnostic.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::AveragingError;

use super::AveragingSystem;

/// Planar Ornstein-Uhlenbeck pairs `v_k in R^2` rotated at speed
/// `omega_k / nu`:
///
/// ```text
/// dv_k = ((omega_k / nu) J v_k - v_k) dtau + b_k dbeta_k
/// ```
///
/// In action-angle variables `I_k = |v_k|^2 / 2`, `phi_k = atan2`, the
/// action satisfies the square-root diffusion
/// `dI_k = (b_k^2 - 2 I_k) dtau + b_k sqrt(2 I_k) dW` exactly, at every
/// `nu` - the exact oracle for the averaged limit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RotatingOuSystem {
    b: Vec<f64>,
    omega: Vec<f64>,
    /// Actions are clamped to this floor inside the angle-diffusion map,
    /// which blows up like `1/sqrt(I)` at the coordinate singularity.
    action_floor: f64,
}

impl RotatingOuSystem {
    pub fn new(b: Vec<f64>, omega: Vec<f64>) -> Result<Self, AveragingError> {
        if b.len() != omega.len() {
            return Err(AveragingError::DimensionMismatch {
                expected: b.len(),
                got: omega.len(),
            });
        }
        Ok(RotatingOuSystem {
            b,
            omega,
            action_floor: 1e-12,
        })
    }

    /// `m` pairs with `b_k = b` and `omega_k = k`.
    pub fn uniform(m: usize, b: f64) -> Self {
        RotatingOuSystem {
            b: vec![b; m],
            omega: (1..=m).map(|k| k as f64).collect(),
            action_floor: 1e-12,
        }
    }

    pub fn noise_amplitudes(&self) -> &[f64] {
        &self.b
    }

    /// Mean of the action law at time `tau` started from `i0`:
    /// `b^2/2 + (i0 - b^2/2) e^{-2 tau}`.
    pub fn action_mean(b: f64, i0: f64, tau: f64) -> f64 {
        let theta = 0.5 * b * b;
        theta + (i0 - theta) * (-2.0 * tau).exp()
    }

    /// Variance of the action law at time `tau` started from `i0`.
    pub fn action_variance(b: f64, i0: f64, tau: f64) -> f64 {
        let e2 = (-2.0 * tau).exp();
        let e4 = (-4.0 * tau).exp();
        i0 * b * b * (e2 - e4) + 0.5 * b.powi(4) * (1.0 - e2) * (1.0 - e2)
    }

    /// Stationary mean `b^2 / 2`; the stationary law is exponential with
    /// this mean.
    pub fn stationary_mean(b: f64) -> f64 {
        0.5 * b * b
    }

    pub fn stationary_cdf(b: f64, x: f64) -> f64 {
        if x <= 0.0 {
            0.0
        } else {
            1.0 - (-x / Self::stationary_mean(b)).exp()
        }
    }
}

impl AveragingSystem for RotatingOuSystem {
    fn slow_dim(&self) -> usize {
        self.b.len()
    }

    fn noise_dim(&self) -> usize {
        2 * self.b.len()
    }

    fn frequency(&self, _actions: &[f64], out: &mut [f64]) {
        out.copy_from_slice(&self.omega);
    }

    fn action_drift(&self, actions: &[f64], _angles: &[f64], out: &mut [f64]) {
        for k in 0..self.b.len() {
            out[k] = self.b[k] * self.b[k] - 2.0 * actions[k];
        }
    }

    fn action_diffusion(&self, actions: &[f64], angles: &[f64], out: &mut [f64]) {
        let d = self.noise_dim();
        out.fill(0.0);
        for k in 0..self.b.len() {
            let radius = (2.0 * actions[k].max(0.0)).sqrt();
            let (s, c) = angles[k].sin_cos();
            out[k * d + 2 * k] = self.b[k] * radius * c;
            out[k * d + 2 * k + 1] = self.b[k] * radius * s;
        }
    }

    fn angle_drift(&self, _actions: &[f64], _angles: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn angle_diffusion(&self, actions: &[f64], angles: &[f64], out: &mut [f64]) {
        let d = self.noise_dim();
        out.fill(0.0);
        for k in 0..self.b.len() {
            let radius = (2.0 * actions[k].max(self.action_floor)).sqrt();
            let (s, c) = angles[k].sin_cos();
            out[k * d + 2 * k] = -self.b[k] * s / radius;
            out[k * d + 2 * k + 1] = self.b[k] * c / radius;
        }
    }

    fn averaged_drift_closed_form(&self, actions: &[f64]) -> Option<Vec<f64>> {
        let mut out = vec![0.0; self.b.len()];
        self.action_drift(actions, &[], &mut out);
        Some(out)
    }

    fn averaged_covariance_closed_form(&self, actions: &[f64]) -> Option<DMatrix<f64>> {
        let m = self.b.len();
        let mut cov = DMatrix::zeros(m, m);
        for k in 0..m {
            cov[(k, k)] = 2.0 * self.b[k] * self.b[k] * actions[k].max(0.0);
        }
        Some(cov)
    }
}

/// Twist system: frequencies `W_k(I) = k + I_k` (unit twist), action drift
/// `F_k = c_k - I_k (1 + kappa cos phi_k)`, constant diagonal action
/// diffusion, no angle noise. Genuinely angle-coupled; its averaged
/// equation is the Ornstein-Uhlenbeck system `dI = (c - I) dtau + sigma dW`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwistSystem {
    c: Vec<f64>,
    kappa: f64,
    sigma: Vec<f64>,
}

impl TwistSystem {
    pub fn new(c: Vec<f64>, kappa: f64, sigma: Vec<f64>) -> Result<Self, AveragingError> {
        if c.len() != sigma.len() {
            return Err(AveragingError::DimensionMismatch {
                expected: c.len(),
                got: sigma.len(),
            });
        }
        Ok(TwistSystem { c, kappa, sigma })
    }
}

impl AveragingSystem for TwistSystem {
    fn slow_dim(&self) -> usize {
        self.c.len()
    }

    fn noise_dim(&self) -> usize {
        self.c.len()
    }

    fn frequency(&self, actions: &[f64], out: &mut [f64]) {
        for k in 0..self.c.len() {
            out[k] = (k + 1) as f64 + actions[k];
        }
    }

    fn action_drift(&self, actions: &[f64], angles: &[f64], out: &mut [f64]) {
        for k in 0..self.c.len() {
            out[k] = self.c[k] - actions[k] * (1.0 + self.kappa * angles[k].cos());
        }
    }

    fn action_diffusion(&self, _actions: &[f64], _angles: &[f64], out: &mut [f64]) {
        let d = self.noise_dim();
        out.fill(0.0);
        for k in 0..self.c.len() {
            out[k * d + k] = self.sigma[k];
        }
    }

    fn angle_drift(&self, _actions: &[f64], _angles: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn angle_diffusion(&self, _actions: &[f64], _angles: &[f64], out: &mut [f64]) {
        out.fill(0.0);
    }

    fn averaged_drift_closed_form(&self, actions: &[f64]) -> Option<Vec<f64>> {
        Some(
            self.c
                .iter()
                .zip(actions.iter())
                .map(|(c, i)| c - i)
                .collect(),
        )
    }

    fn averaged_covariance_closed_form(&self, _actions: &[f64]) -> Option<DMatrix<f64>> {
        let m = self.c.len();
        let mut cov = DMatrix::zeros(m, m);
        for k in 0..m {
            cov[(k, k)] = self.sigma[k] * self.sigma[k];
        }
        Some(cov)
    }
}

/// Serializable system description consumed by the CLI: either a named
/// default or explicit parameters.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum SystemSpec {
    RotatingOu {
        b: Vec<f64>,
        #[serde(default)]
        omega: Option<Vec<f64>>,
    },
    Twist {
        c: Vec<f64>,
        kappa: f64,
        sigma: Vec<f64>,
    },
}

impl SystemSpec {
    /// Default parameters for a named catalog system.
    pub fn by_name(name: &str) -> Option<SystemSpec> {
        match name {
            "rotating-ou" => Some(SystemSpec::RotatingOu {
                b: vec![1.0, 0.8, 0.6],
                omega: None,
            }),
            "twist" => Some(SystemSpec::Twist {
                c: vec![1.0, 0.5],
                kappa: 0.5,
                sigma: vec![0.3, 0.3],
            }),
            _ => None,
        }
    }

    pub fn build(&self) -> Result<Box<dyn AveragingSystem>, AveragingError> {
        match self {
            SystemSpec::RotatingOu { b, omega } => {
                let omega = omega
                    .clone()
                    .unwrap_or_else(|| (1..=b.len()).map(|k| k as f64).collect());
                Ok(Box::new(RotatingOuSystem::new(b.clone(), omega)?))
            }
            SystemSpec::Twist { c, kappa, sigma } => {
                Ok(Box::new(TwistSystem::new(c.clone(), *kappa, sigma.clone())?))
            }
        }
    }
}
