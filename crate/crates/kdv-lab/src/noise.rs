//! Forcing specification: per-mode amplitudes `b_s` of the white-in-time
//! noise `d/dt sum_s b_s beta_s(t) e_s(x)`, truncated to `|s| <= K`.

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::FieldError;
use crate::fourier::SpectralField;

/// Forcing amplitudes for modes `s = +-1 .. +-K`. Every amplitude must be
/// nonzero: the noise acts on all retained modes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    /// `b_s` for `s = 1..K` (cosine modes).
    cos_amps: Vec<f64>,
    /// `b_s` for `s = -1..-K` (sine modes).
    sin_amps: Vec<f64>,
}

impl NoiseSpec {
    pub fn new(cos_amps: Vec<f64>, sin_amps: Vec<f64>) -> Result<Self, FieldError> {
        if cos_amps.len() != sin_amps.len() {
            return Err(FieldError::InvalidData(format!(
                "amplitude vectors must have equal length, got {} and {}",
                cos_amps.len(),
                sin_amps.len()
            )));
        }
        if let Some(j) = cos_amps
            .iter()
            .chain(sin_amps.iter())
            .position(|b| *b == 0.0 || !b.is_finite())
        {
            return Err(FieldError::InvalidData(format!(
                "all forcing amplitudes must be finite and nonzero (violated at slot {j})"
            )));
        }
        Ok(NoiseSpec { cos_amps, sin_amps })
    }

    /// Symmetric power-law profile `b_s = amplitude * |s|^{-q}`, the default
    /// smooth-in-x forcing.
    pub fn inverse_power(k_max: usize, q: f64, amplitude: f64) -> Result<Self, FieldError> {
        let amps: Vec<f64> = (1..=k_max)
            .map(|k| amplitude * (k as f64).powf(-q))
            .collect();
        Self::new(amps.clone(), amps)
    }

    /// All amplitudes zero. This violates the nondegeneracy every stochastic
    /// result assumes and exists only for damping-only diagnostics; it
    /// bypasses the nonzero-amplitude validation on purpose.
    pub fn unforced(k_max: usize) -> Self {
        NoiseSpec {
            cos_amps: vec![0.0; k_max],
            sin_amps: vec![0.0; k_max],
        }
    }

    pub fn k_max(&self) -> usize {
        self.cos_amps.len()
    }

    /// Amplitude `b_s`; errors on `s = 0` or `|s| > K`.
    pub fn amplitude(&self, s: i64) -> Result<f64, FieldError> {
        if s == 0 {
            return Err(FieldError::ZeroMeanViolation);
        }
        let k = s.unsigned_abs() as usize;
        if k > self.k_max() {
            return Err(FieldError::ModeOutOfRange {
                s,
                k_max: self.k_max(),
            });
        }
        Ok(if s > 0 {
            self.cos_amps[k - 1]
        } else {
            self.sin_amps[k - 1]
        })
    }

    pub fn cos_amplitudes(&self) -> &[f64] {
        &self.cos_amps
    }

    pub fn sin_amplitudes(&self) -> &[f64] {
        &self.sin_amps
    }

    /// Smallest constant `C_m` with `|b_s| <= C_m |s|^{-m}` over the retained
    /// modes.
    pub fn decay_constant(&self, m: usize) -> f64 {
        let mut c = 0.0f64;
        for j in 0..self.k_max() {
            let k = (j + 1) as f64;
            let w = k.powi(m as i32);
            c = c.max(self.cos_amps[j].abs() * w).max(self.sin_amps[j].abs() * w);
        }
        c
    }

    /// Check `|b_s| <= c_m |s|^{-m}` for all retained modes.
    pub fn validate_decay(&self, m: usize, c_m: f64) -> Result<(), FieldError> {
        let actual = self.decay_constant(m);
        if actual <= c_m {
            Ok(())
        } else {
            Err(FieldError::InvalidData(format!(
                "decay bound violated: max |b_s| |s|^{m} = {actual} > {c_m}"
            )))
        }
    }

    /// Sample one Wiener increment of the forcing over a window `dt`:
    /// `sum_s b_s xi_s sqrt(dt) e_s` with independent standard normal `xi_s`
    /// drawn in the fixed order `s = +1, -1, +2, -2, ...`. Deterministic
    /// given the generator state.
    pub fn sample_increment_into<R: Rng>(
        &self,
        dt: f64,
        rng: &mut R,
        cos_out: &mut [f64],
        sin_out: &mut [f64],
    ) {
        let sqrt_dt = dt.max(0.0).sqrt();
        for j in 0..self.k_max() {
            let xi_cos: f64 = rng.sample(StandardNormal);
            let xi_sin: f64 = rng.sample(StandardNormal);
            cos_out[j] = self.cos_amps[j] * xi_cos * sqrt_dt;
            sin_out[j] = self.sin_amps[j] * xi_sin * sqrt_dt;
        }
    }

    /// [`sample_increment_into`](Self::sample_increment_into) packaged as a
    /// field.
    pub fn noise_increment<R: Rng>(&self, dt: f64, rng: &mut R) -> SpectralField {
        let k = self.k_max();
        let mut cos = vec![0.0; k];
        let mut sin = vec![0.0; k];
        self.sample_increment_into(dt, rng, &mut cos, &mut sin);
        let mut field = SpectralField::zeros(k);
        for j in 0..k {
            field.set_coefficient((j + 1) as i64, cos[j]).unwrap();
            field.set_coefficient(-((j + 1) as i64), sin[j]).unwrap();
        }
        field
    }
}
