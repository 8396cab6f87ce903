//! Real trigonometric spectral representation of zero-mean 2pi-periodic
//! functions.
//!
//! A field is stored by its amplitudes `u_s` with respect to the basis
//! `e_s(x) = cos(s x)` for `s > 0` and `e_s(x) = sin(|s| x)` for `s < 0`,
//! `1 <= |s| <= K`. The basis is orthonormal under the pairing
//! `<u, v> = (1/pi) int_0^{2pi} u v dx`, so every norm and Parseval identity
//! below is coefficient-free. There is no `s = 0` slot: the space contains
//! only zero-mean functions.

use std::cell::RefCell;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::FieldError;

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

fn plan_inverse(n: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Zero-mean real trigonometric polynomial with modes `|s| <= K`.
///
/// Immutable after construction; all operations return new fields.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralField {
    k_max: usize,
    n_grid: usize,
    /// `cos_coeffs[j]` is the amplitude of `cos((j+1) x)`, i.e. `u_{j+1}`.
    cos_coeffs: Vec<f64>,
    /// `sin_coeffs[j]` is the amplitude of `sin((j+1) x)`, i.e. `u_{-(j+1)}`.
    sin_coeffs: Vec<f64>,
}

/// Result of a dealiased pointwise product. The product of two zero-mean
/// fields generally has a nonzero mean; the field part is the zero-mean
/// remainder and the constant component is reported separately, since the
/// KdV nonlinearity only ever consumes the product through a derivative.
#[derive(Debug, Clone)]
pub struct ProductResult {
    pub field: SpectralField,
    /// Mean value `(1/2pi) int f g dx` of the product.
    pub mean: f64,
}

/// Smallest power of two `>= 4 * k_max` (and at least 8).
pub fn default_grid_size(k_max: usize) -> usize {
    let mut n = 8;
    while n < 4 * k_max {
        n *= 2;
    }
    n
}

impl SpectralField {
    /// Zero field with the default grid (smallest power of two >= 4K).
    pub fn zeros(k_max: usize) -> Self {
        Self::zeros_with_grid(k_max, default_grid_size(k_max))
            .expect("default grid is always valid")
    }

    /// Zero field on an explicit collocation grid of `n_grid` points.
    pub fn zeros_with_grid(k_max: usize, n_grid: usize) -> Result<Self, FieldError> {
        if !n_grid.is_power_of_two() {
            return Err(FieldError::GridNotPowerOfTwo(n_grid));
        }
        if n_grid < 4 * k_max {
            return Err(FieldError::GridTooSmall { n_grid, k_max });
        }
        Ok(SpectralField {
            k_max,
            n_grid,
            cos_coeffs: vec![0.0; k_max],
            sin_coeffs: vec![0.0; k_max],
        })
    }

    /// Build a field from `(s, amplitude)` pairs. Rejects `s = 0` (the basis
    /// has no mean slot) and `|s| > K`. Later pairs with the same `s`
    /// overwrite earlier ones.
    pub fn from_modes(pairs: &[(i64, f64)], k_max: usize) -> Result<Self, FieldError> {
        let mut field = Self::zeros(k_max);
        for &(s, amp) in pairs {
            field.set_coefficient(s, amp)?;
        }
        Ok(field)
    }

    /// Same as [`from_modes`](Self::from_modes) with an explicit grid size.
    pub fn from_modes_with_grid(
        pairs: &[(i64, f64)],
        k_max: usize,
        n_grid: usize,
    ) -> Result<Self, FieldError> {
        let mut field = Self::zeros_with_grid(k_max, n_grid)?;
        for &(s, amp) in pairs {
            field.set_coefficient(s, amp)?;
        }
        Ok(field)
    }

    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn n_grid(&self) -> usize {
        self.n_grid
    }

    /// Amplitude `u_s`. Errors on `s = 0` or `|s| > K`.
    pub fn coefficient(&self, s: i64) -> Result<f64, FieldError> {
        let idx = self.mode_index(s)?;
        Ok(if s > 0 {
            self.cos_coeffs[idx]
        } else {
            self.sin_coeffs[idx]
        })
    }

    pub fn set_coefficient(&mut self, s: i64, amplitude: f64) -> Result<(), FieldError> {
        let idx = self.mode_index(s)?;
        if s > 0 {
            self.cos_coeffs[idx] = amplitude;
        } else {
            self.sin_coeffs[idx] = amplitude;
        }
        Ok(())
    }

    fn mode_index(&self, s: i64) -> Result<usize, FieldError> {
        if s == 0 {
            return Err(FieldError::ZeroMeanViolation);
        }
        let k = s.unsigned_abs() as usize;
        if k > self.k_max {
            return Err(FieldError::ModeOutOfRange {
                s,
                k_max: self.k_max,
            });
        }
        Ok(k - 1)
    }

    /// Cosine amplitudes `u_1 .. u_K` (read-only).
    pub fn cos_coefficients(&self) -> &[f64] {
        &self.cos_coeffs
    }

    /// Sine amplitudes `u_{-1} .. u_{-K}` (read-only).
    pub fn sin_coefficients(&self) -> &[f64] {
        &self.sin_coeffs
    }

    /// Exact spectral derivative of the given order.
    ///
    /// One application maps `(cos kx)' = -k sin kx`, `(sin kx)' = k cos kx`;
    /// order 0 is the identity.
    pub fn derivative(&self, order: usize) -> SpectralField {
        let mut cos = self.cos_coeffs.clone();
        let mut sin = self.sin_coeffs.clone();
        for _ in 0..order {
            for j in 0..self.k_max {
                let k = (j + 1) as f64;
                let a = cos[j];
                let b = sin[j];
                // u = a cos kx + b sin kx  ->  u' = k b cos kx - k a sin kx
                cos[j] = k * b;
                sin[j] = -k * a;
            }
        }
        SpectralField {
            k_max: self.k_max,
            n_grid: self.n_grid,
            cos_coeffs: cos,
            sin_coeffs: sin,
        }
    }

    /// Sobolev norm `||u||_m = (sum_s s^{2m} u_s^2)^{1/2}`, the coefficient
    /// form of `<d^m u, d^m u>^{1/2}` under the `(1/pi)` pairing.
    pub fn sobolev_norm(&self, m: usize) -> f64 {
        self.sobolev_norm_sq(m).sqrt()
    }

    pub fn sobolev_norm_sq(&self, m: usize) -> f64 {
        let mut sum = 0.0;
        for j in 0..self.k_max {
            let k = (j + 1) as f64;
            let w = k.powi(2 * m as i32);
            sum += w * (self.cos_coeffs[j] * self.cos_coeffs[j]
                + self.sin_coeffs[j] * self.sin_coeffs[j]);
        }
        sum
    }

    /// Translated field `x -> u(x - x0)`. Actions are invariant under this
    /// map; the mode-`k` phase shifts by `k * x0`.
    pub fn translate(&self, x0: f64) -> SpectralField {
        let mut out = self.clone();
        for j in 0..self.k_max {
            let k = (j + 1) as f64;
            let (s, c) = (k * x0).sin_cos();
            let a = self.cos_coeffs[j];
            let b = self.sin_coeffs[j];
            out.cos_coeffs[j] = a * c - b * s;
            out.sin_coeffs[j] = a * s + b * c;
        }
        out
    }

    pub fn scale(&self, factor: f64) -> SpectralField {
        let mut out = self.clone();
        for j in 0..self.k_max {
            out.cos_coeffs[j] *= factor;
            out.sin_coeffs[j] *= factor;
        }
        out
    }

    pub fn add(&self, other: &SpectralField) -> Result<SpectralField, FieldError> {
        self.check_same_cutoff(other)?;
        let mut out = self.clone();
        for j in 0..self.k_max {
            out.cos_coeffs[j] += other.cos_coeffs[j];
            out.sin_coeffs[j] += other.sin_coeffs[j];
        }
        Ok(out)
    }

    pub fn is_finite(&self) -> bool {
        self.cos_coeffs.iter().chain(self.sin_coeffs.iter()).all(|x| x.is_finite())
    }

    fn check_same_cutoff(&self, other: &SpectralField) -> Result<(), FieldError> {
        if self.k_max != other.k_max {
            return Err(FieldError::CutoffMismatch {
                left: self.k_max,
                right: other.k_max,
            });
        }
        Ok(())
    }

    /// Collocation values at `x_j = 2 pi j / n`, for any power-of-two
    /// `n > 2K`.
    pub fn values_on_grid(&self, n: usize) -> Vec<f64> {
        assert!(n.is_power_of_two() && n > 2 * self.k_max);
        let mut spectrum = vec![Complex64::new(0.0, 0.0); n];
        for j in 0..self.k_max {
            // exponential coefficient of e^{ikx}: (a_k - i b_k) / 2
            let c = Complex64::new(self.cos_coeffs[j] * 0.5, -self.sin_coeffs[j] * 0.5);
            spectrum[j + 1] = c;
            spectrum[n - (j + 1)] = c.conj();
        }
        plan_inverse(n).process(&mut spectrum);
        spectrum.iter().map(|z| z.re).collect()
    }

    /// Collocation values on the field's own grid.
    pub fn values(&self) -> Vec<f64> {
        self.values_on_grid(self.n_grid)
    }

    /// Recover a field (plus its mean) from values on an `n`-point grid,
    /// truncating to modes `|s| <= k_max`.
    pub fn from_grid_values(
        values: &[f64],
        k_max: usize,
        n_grid: usize,
    ) -> Result<ProductResult, FieldError> {
        let n = values.len();
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        plan_forward(n).process(&mut buf);
        let scale = 1.0 / n as f64;
        let mean = buf[0].re * scale;
        let mut field = Self::zeros_with_grid(k_max, n_grid)?;
        for j in 0..k_max {
            let c = buf[j + 1] * scale;
            field.cos_coeffs[j] = 2.0 * c.re;
            field.sin_coeffs[j] = -2.0 * c.im;
        }
        Ok(ProductResult { field, mean })
    }

    /// Dealiased pointwise product, truncated to modes `|s| <= K`.
    ///
    /// The fields are evaluated on the shared collocation grid, multiplied
    /// pointwise, and transformed back. With `N >= 4K` enforced at
    /// construction no product mode below the 2/3-rule cutoff aliases into
    /// the retained range, so the truncation equals the exact convolution on
    /// `|s| <= K`. The constant component is returned separately.
    pub fn pointwise_product(&self, other: &SpectralField) -> Result<ProductResult, FieldError> {
        self.check_same_cutoff(other)?;
        let n = self.n_grid.max(other.n_grid);
        let mut vals = self.values_on_grid(n);
        let other_vals = other.values_on_grid(n);
        for (v, w) in vals.iter_mut().zip(other_vals.iter()) {
            *v *= w;
        }
        Self::from_grid_values(&vals, self.k_max, self.n_grid.max(other.n_grid))
    }

    /// `(1/pi) int_0^{2pi} u v dx`, the pairing under which the basis is
    /// orthonormal. Computed from coefficients.
    pub fn inner_product(&self, other: &SpectralField) -> Result<f64, FieldError> {
        self.check_same_cutoff(other)?;
        let mut sum = 0.0;
        for j in 0..self.k_max {
            sum += self.cos_coeffs[j] * other.cos_coeffs[j]
                + self.sin_coeffs[j] * other.sin_coeffs[j];
        }
        Ok(sum)
    }

    /// Serialize as CSV with header `s,amplitude`, one row per nonzero mode,
    /// positive modes first in increasing `|s|`, then negative.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("s,amplitude\n");
        for j in 0..self.k_max {
            if self.cos_coeffs[j] != 0.0 {
                out.push_str(&format!("{},{}\n", j + 1, fmt_float(self.cos_coeffs[j])));
            }
        }
        for j in 0..self.k_max {
            if self.sin_coeffs[j] != 0.0 {
                out.push_str(&format!("{},{}\n", -((j + 1) as i64), fmt_float(self.sin_coeffs[j])));
            }
        }
        out
    }

    /// JSON sidecar `{"K": .., "N": ..}` accompanying the CSV.
    pub fn sidecar_json(&self) -> String {
        format!("{{\"K\": {}, \"N\": {}}}", self.k_max, self.n_grid)
    }

    /// Parse a field from the CSV produced by [`to_csv`](Self::to_csv) and
    /// the `{K, N}` sidecar values.
    pub fn from_csv(csv: &str, k_max: usize, n_grid: usize) -> Result<Self, FieldError> {
        let mut field = Self::zeros_with_grid(k_max, n_grid)?;
        for (lineno, line) in csv.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || (lineno == 0 && line.starts_with("s,")) {
                continue;
            }
            let mut parts = line.split(',');
            let (s_txt, a_txt) = (parts.next(), parts.next());
            let (s_txt, a_txt) = match (s_txt, a_txt) {
                (Some(s), Some(a)) => (s.trim(), a.trim()),
                _ => {
                    return Err(FieldError::InvalidData(format!(
                        "line {}: expected `s,amplitude`",
                        lineno + 1
                    )))
                }
            };
            let s: i64 = s_txt.parse().map_err(|_| {
                FieldError::InvalidData(format!("line {}: bad mode index `{s_txt}`", lineno + 1))
            })?;
            let amp: f64 = a_txt.parse().map_err(|_| {
                FieldError::InvalidData(format!("line {}: bad amplitude `{a_txt}`", lineno + 1))
            })?;
            field.set_coefficient(s, amp)?;
        }
        Ok(field)
    }
}

/// Deterministic float formatting used in every CSV this crate writes.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "NaN".to_string()
    } else {
        format!("{x:.15e}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn single(s: i64, amp: f64, k_max: usize) -> SpectralField {
        SpectralField::from_modes(&[(s, amp)], k_max).unwrap()
    }

    #[test]
    fn from_modes_basics() {
        let f = single(1, 1.0, 4);
        assert_eq!(f.coefficient(1).unwrap(), 1.0);
        assert_eq!(f.coefficient(-1).unwrap(), 0.0);

        let g = single(-2, 0.5, 4);
        assert_eq!(g.coefficient(-2).unwrap(), 0.5);

        assert_eq!(
            SpectralField::from_modes(&[(0, 1.0)], 4),
            Err(FieldError::ZeroMeanViolation)
        );
        assert_eq!(
            SpectralField::from_modes(&[(5, 1.0)], 4),
            Err(FieldError::ModeOutOfRange { s: 5, k_max: 4 })
        );
    }

    #[test]
    fn coefficient_out_of_range() {
        let f = single(1, 1.0, 4);
        assert!(f.coefficient(0).is_err());
        assert!(f.coefficient(7).is_err());
        assert!(f.coefficient(-7).is_err());
    }

    #[test]
    fn grid_validation() {
        assert!(matches!(
            SpectralField::zeros_with_grid(8, 16),
            Err(FieldError::GridTooSmall { .. })
        ));
        assert!(matches!(
            SpectralField::zeros_with_grid(8, 48),
            Err(FieldError::GridNotPowerOfTwo(48))
        ));
    }

    #[test]
    fn derivative_analytic() {
        // (cos x)' = -sin x
        let f = single(1, 1.0, 4);
        let d1 = f.derivative(1);
        assert_abs_diff_eq!(d1.coefficient(-1).unwrap(), -1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(d1.coefficient(1).unwrap(), 0.0, epsilon = 1e-15);

        // (cos x)''' = sin x
        let d3 = f.derivative(3);
        assert_abs_diff_eq!(d3.coefficient(-1).unwrap(), 1.0, epsilon = 1e-15);

        // order 0 is the identity
        assert_eq!(f.derivative(0), f);
    }

    #[test]
    fn derivative_composes_exactly() {
        let f = SpectralField::from_modes(&[(1, 0.3), (-2, 0.7), (3, -0.1)], 8).unwrap();
        assert_eq!(f.derivative(1).derivative(1), f.derivative(2));
    }

    #[test]
    fn sobolev_norms_analytic() {
        let f = single(1, 1.0, 4);
        assert_abs_diff_eq!(f.sobolev_norm(0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(f.sobolev_norm(1), 1.0, epsilon = 1e-15);

        // || 0.5 sin 2x ||_1 = 1: derivative is cos 2x
        let g = single(-2, 0.5, 4);
        assert_abs_diff_eq!(g.sobolev_norm(1), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn product_analytic_cases() {
        let f = single(1, 1.0, 4);
        // cos^2 x = 1/2 + cos(2x)/2
        let sq = f.pointwise_product(&f).unwrap();
        assert_abs_diff_eq!(sq.mean, 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(sq.field.coefficient(2).unwrap(), 0.5, epsilon = 1e-14);
        assert_abs_diff_eq!(sq.field.sobolev_norm_sq(0), 0.25, epsilon = 1e-14);

        // cos x sin x = sin(2x)/2
        let g = single(-1, 1.0, 4);
        let fg = f.pointwise_product(&g).unwrap();
        assert_abs_diff_eq!(fg.mean, 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(fg.field.coefficient(-2).unwrap(), 0.5, epsilon = 1e-14);

        // f * 0 = 0
        let z = SpectralField::zeros(4);
        let fz = f.pointwise_product(&z).unwrap();
        assert_eq!(fz.mean, 0.0);
        assert_eq!(fz.field.sobolev_norm(0), 0.0);
    }

    /// Exact convolution of two fields in the exponential basis; the
    /// independent oracle for the dealiased grid product.
    fn convolution_oracle(f: &SpectralField, g: &SpectralField) -> (Vec<f64>, Vec<f64>, f64) {
        let k = f.k_max();
        let coeff = |h: &SpectralField, j: i64| -> Complex64 {
            if j == 0 || j.unsigned_abs() as usize > k {
                Complex64::new(0.0, 0.0)
            } else {
                let a = h.coefficient(j.abs()).unwrap();
                let b = h.coefficient(-j.abs()).unwrap();
                if j > 0 {
                    Complex64::new(a * 0.5, -b * 0.5)
                } else {
                    Complex64::new(a * 0.5, b * 0.5)
                }
            }
        };
        let mut cos_out = vec![0.0; k];
        let mut sin_out = vec![0.0; k];
        let mut mean = 0.0;
        for s in 0..=(k as i64) {
            let mut c = Complex64::new(0.0, 0.0);
            for j in -(k as i64)..=(k as i64) {
                c += coeff(f, j) * coeff(g, s - j);
            }
            if s == 0 {
                mean = c.re;
            } else {
                cos_out[(s - 1) as usize] = 2.0 * c.re;
                sin_out[(s - 1) as usize] = -2.0 * c.im;
            }
        }
        (cos_out, sin_out, mean)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        /// Parseval: the coefficient-space norm matches grid quadrature.
        #[test]
        fn parseval_matches_grid_quadrature(
            amps in proptest::collection::vec(-1.0f64..1.0, 16)
        ) {
            let k = 8;
            let mut f = SpectralField::zeros(k);
            for j in 0..k {
                f.set_coefficient((j + 1) as i64, amps[j]).unwrap();
                f.set_coefficient(-((j + 1) as i64), amps[k + j]).unwrap();
            }
            let vals = f.values();
            let n = vals.len() as f64;
            // (1/pi) int f^2 dx = 2 * mean(f^2) on the collocation grid
            let grid_norm_sq = 2.0 * vals.iter().map(|v| v * v).sum::<f64>() / n;
            let coeff_norm_sq = f.sobolev_norm_sq(0);
            prop_assert!((grid_norm_sq - coeff_norm_sq).abs()
                <= 1e-12 * coeff_norm_sq.max(1e-30));
        }

        /// The dealiased grid product equals the exact convolution for every
        /// retained mode (N >= 4K makes the truncation alias-free).
        #[test]
        fn product_matches_convolution(
            f_amps in proptest::collection::vec(-1.0f64..1.0, 12),
            g_amps in proptest::collection::vec(-1.0f64..1.0, 12)
        ) {
            let k = 6;
            let mut f = SpectralField::zeros(k);
            let mut g = SpectralField::zeros(k);
            for j in 0..k {
                f.set_coefficient((j + 1) as i64, f_amps[j]).unwrap();
                f.set_coefficient(-((j + 1) as i64), f_amps[k + j]).unwrap();
                g.set_coefficient((j + 1) as i64, g_amps[j]).unwrap();
                g.set_coefficient(-((j + 1) as i64), g_amps[k + j]).unwrap();
            }
            let fg = f.pointwise_product(&g).unwrap();
            let (cos_ref, sin_ref, mean_ref) = convolution_oracle(&f, &g);
            prop_assert!((fg.mean - mean_ref).abs() <= 1e-12);
            for j in 0..k {
                prop_assert!((fg.field.cos_coefficients()[j] - cos_ref[j]).abs() <= 1e-12);
                prop_assert!((fg.field.sin_coefficients()[j] - sin_ref[j]).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn dealiasing_exact_below_third_of_cutoff() {
        // Fields whose modes stay below K/3 multiply exactly even under the
        // bare 2/3-rule argument; spot-check against the convolution oracle.
        let k = 9;
        let f = SpectralField::from_modes(&[(1, 0.4), (-2, 0.3), (3, -0.2)], k).unwrap();
        let g = SpectralField::from_modes(&[(2, -0.5), (-3, 0.8), (1, 0.1)], k).unwrap();
        let fg = f.pointwise_product(&g).unwrap();
        let (cos_ref, sin_ref, mean_ref) = convolution_oracle(&f, &g);
        assert_abs_diff_eq!(fg.mean, mean_ref, epsilon = 1e-12);
        for j in 0..k {
            assert_abs_diff_eq!(fg.field.cos_coefficients()[j], cos_ref[j], epsilon = 1e-12);
            assert_abs_diff_eq!(fg.field.sin_coefficients()[j], sin_ref[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn grid_round_trip_is_exact() {
        let f = SpectralField::from_modes(&[(1, 0.3), (-5, 1.2), (7, -0.8)], 8).unwrap();
        let vals = f.values();
        let back = SpectralField::from_grid_values(&vals, 8, f.n_grid()).unwrap();
        assert_abs_diff_eq!(back.mean, 0.0, epsilon = 1e-13);
        for s in [1i64, -1, 3, -5, 7, -8] {
            assert_abs_diff_eq!(
                back.field.coefficient(s).unwrap(),
                f.coefficient(s).unwrap(),
                epsilon = 1e-12
            );
        }
    }

    #[test]
    fn translation_preserves_norms() {
        let f = SpectralField::from_modes(&[(1, 0.3), (-2, 0.7), (4, -0.2)], 8).unwrap();
        let g = f.translate(0.7318);
        for m in 0..3 {
            assert_abs_diff_eq!(f.sobolev_norm(m), g.sobolev_norm(m), epsilon = 1e-13);
        }
        // translate(0) is the identity
        let h = f.translate(0.0);
        for s in [1i64, -2, 4] {
            assert_abs_diff_eq!(
                h.coefficient(s).unwrap(),
                f.coefficient(s).unwrap(),
                epsilon = 1e-15
            );
        }
    }

    #[test]
    fn csv_round_trip() {
        let f = SpectralField::from_modes(&[(1, 0.3), (-2, 0.15), (6, -1.25e-3)], 8).unwrap();
        let csv = f.to_csv();
        assert!(csv.starts_with("s,amplitude\n"));
        let back = SpectralField::from_csv(&csv, 8, f.n_grid()).unwrap();
        for s in [1i64, -2, 6, 3, -8] {
            assert_eq!(back.coefficient(s).unwrap(), f.coefficient(s).unwrap());
        }
        assert_eq!(f.sidecar_json(), "{\"K\": 8, \"N\": 32}");
    }
}
