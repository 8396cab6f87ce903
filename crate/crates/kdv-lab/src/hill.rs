//! Periodic spectral theory of the Hill operator `-y'' + u y` on `[0, 2pi]`
//! and the action/angle estimators built on it.
//!
//! Band edges come from two dense symmetric eigenproblems (periodic and
//! antiperiodic boundary conditions) assembled in the real trigonometric
//! basis, which is unitarily equivalent to the exponential Fourier basis and
//! keeps the matrices real. The spectral gap lengths `gamma_k` feed the
//! quadratic action estimator `I_k = c gamma_k^2 / k`; the linearization of
//! the coordinate map at the origin provides the independent small-amplitude
//! route `I_k = (u_k^2 + u_{-k}^2) / (2k)` and the angle convention
//! `phi_k = atan2(u_{-k}, u_k)`.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{FieldError, HillError};
use crate::fourier::SpectralField;

/// Gap-to-action constant in `I_k = c gamma_k^2 / k`.
///
/// Pinned by regressing the linearized actions against `gamma_k^2 / k` on
/// single-mode potentials `a cos(kx)`, `a in {0.01..0.05}`, `k in {1,2,3}`
/// (see [`calibrate_gap_action_constant`], re-run by the calibration tests).
/// The small-amplitude limit of the ratio is exactly 1/2 in this
/// normalization.
pub const GAP_ACTION_CONSTANT: f64 = 0.5;

/// Angles are reported as undefined when `u_k^2 + u_{-k}^2` falls below this
/// floor.
pub const DEFAULT_ANGLE_FLOOR: f64 = 1e-14;

/// Ordered band edges `lambda_0 < lambda_1 <= lambda_2 < ...` up to index
/// `2 K_spec`, and the gap lengths `gamma_k = lambda_{2k} - lambda_{2k-1}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HillSpectrum {
    pub edges: Vec<f64>,
    pub gaps: Vec<f64>,
}

impl HillSpectrum {
    pub fn k_spec(&self) -> usize {
        self.gaps.len()
    }
}

/// Tracked action/angle coordinates. Gap-based estimation produces actions
/// only; the angle slots are then flagged undefined.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ActionAngleState {
    /// Non-negative actions `I_1..I_m`.
    pub actions: Vec<f64>,
    /// Angles in `[0, 2pi)`; meaningful only where `angle_defined` is set.
    pub angles: Vec<f64>,
    pub angle_defined: Vec<bool>,
}

impl ActionAngleState {
    pub fn actions_only(actions: Vec<f64>) -> Self {
        let m = actions.len();
        ActionAngleState {
            actions,
            angles: vec![0.0; m],
            angle_defined: vec![false; m],
        }
    }

    pub fn tracked_modes(&self) -> usize {
        self.actions.len()
    }

    /// Weighted action norm `|I|_{h_I^p} = 2 sum_j j^{1+2p} I_j`.
    pub fn weighted_norm(&self, p: usize) -> f64 {
        2.0 * self
            .actions
            .iter()
            .enumerate()
            .map(|(j0, &i_j)| ((j0 + 1) as f64).powi(1 + 2 * p as i32) * i_j)
            .sum::<f64>()
    }

    /// All actions non-negative (octant membership).
    pub fn in_octant(&self) -> bool {
        self.actions.iter().all(|&i| i >= 0.0)
    }
}

/// Exponential-basis coefficient lookup for the potential, with zero-mean
/// slot and out-of-range modes pinned to zero. `cos_part(j) = a_j`,
/// `sin_part(j) = b_j`.
struct PotentialCoeffs<'a> {
    u: &'a SpectralField,
}

impl PotentialCoeffs<'_> {
    fn a(&self, j: usize) -> f64 {
        if j == 0 || j > self.u.k_max() {
            0.0
        } else {
            self.u.cos_coefficients()[j - 1]
        }
    }

    fn b(&self, j: usize) -> f64 {
        if j == 0 || j > self.u.k_max() {
            0.0
        } else {
            self.u.sin_coefficients()[j - 1]
        }
    }
}

fn periodic_matrix(u: &SpectralField, m_trunc: usize) -> DMatrix<f64> {
    let p = PotentialCoeffs { u };
    let m = m_trunc;
    let dim = 2 * m + 1;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    // index 0: constant mode; 1..=m: cos(n x); m+1..=2m: sin(n x)
    let sqrt_half = 0.5f64.sqrt();
    for n in 1..=m {
        h[(0, n)] = p.a(n) * sqrt_half;
        h[(n, 0)] = h[(0, n)];
        h[(0, m + n)] = p.b(n) * sqrt_half;
        h[(m + n, 0)] = h[(0, m + n)];
    }
    for n in 1..=m {
        h[(n, n)] = (n * n) as f64 + 0.5 * p.a(2 * n);
        h[(m + n, m + n)] = (n * n) as f64 - 0.5 * p.a(2 * n);
        for mm in (n + 1)..=m {
            let diff = p.a(mm - n);
            let sum = p.a(n + mm);
            h[(n, mm)] = 0.5 * (diff + sum);
            h[(mm, n)] = h[(n, mm)];
            h[(m + n, m + mm)] = 0.5 * (diff - sum);
            h[(m + mm, m + n)] = h[(m + n, m + mm)];
        }
        // cos(n x) against sin(mm x)
        for mm in 1..=m {
            let sign = if mm > n {
                1.0
            } else if mm < n {
                -1.0
            } else {
                0.0
            };
            let val = 0.5 * (p.b(n + mm) + sign * p.b(n.abs_diff(mm)));
            h[(n, m + mm)] = val;
            h[(m + mm, n)] = val;
        }
    }
    h
}

fn antiperiodic_matrix(u: &SpectralField, m_trunc: usize) -> DMatrix<f64> {
    let p = PotentialCoeffs { u };
    let m = m_trunc;
    let dim = 2 * m;
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    // half-integer modes p_n = n + 1/2, n = 0..m-1;
    // index n: cos(p_n x); index m + n: sin(p_n x)
    for n in 0..m {
        let pn = n as f64 + 0.5;
        h[(n, n)] = pn * pn + 0.5 * p.a(2 * n + 1);
        h[(m + n, m + n)] = pn * pn - 0.5 * p.a(2 * n + 1);
        for mm in (n + 1)..m {
            let diff = p.a(mm - n);
            let sum = p.a(n + mm + 1);
            h[(n, mm)] = 0.5 * (diff + sum);
            h[(mm, n)] = h[(n, mm)];
            h[(m + n, m + mm)] = 0.5 * (diff - sum);
            h[(m + mm, m + n)] = h[(m + n, m + mm)];
        }
        for mm in 0..m {
            let sign = if mm > n {
                1.0
            } else if mm < n {
                -1.0
            } else {
                0.0
            };
            let val = 0.5 * (p.b(n + mm + 1) + sign * p.b(n.abs_diff(mm)));
            h[(n, m + mm)] = val;
            h[(m + mm, n)] = val;
        }
    }
    h
}

fn sorted_eigenvalues(h: DMatrix<f64>) -> Vec<f64> {
    let eig = h.symmetric_eigen();
    let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    vals.sort_by(f64::total_cmp);
    vals
}

/// Band edges and gaps of `-y'' + u y` from the periodic and antiperiodic
/// eigenproblems, merged in band order: the k-th gap pair comes from the
/// antiperiodic spectrum for odd `k` and the periodic one for even `k`.
pub fn band_edges(
    u: &SpectralField,
    k_spec: usize,
    m_trunc: usize,
) -> Result<HillSpectrum, HillError> {
    if m_trunc < 4 * k_spec {
        return Err(HillError::TruncationBelowMinimum {
            m_trunc,
            min: 4 * k_spec,
        });
    }
    let periodic = sorted_eigenvalues(periodic_matrix(u, m_trunc));
    let antiperiodic = sorted_eigenvalues(antiperiodic_matrix(u, m_trunc));

    let mut edges = Vec::with_capacity(2 * k_spec + 1);
    edges.push(periodic[0]);
    for k in 1..=k_spec {
        let (lo, hi) = if k % 2 == 1 {
            (antiperiodic[k - 1], antiperiodic[k])
        } else {
            (periodic[k - 1], periodic[k])
        };
        edges.push(lo);
        edges.push(hi);
    }

    // Interlacing: bands must not overlap. Gap non-negativity inside a pair
    // is automatic (consecutive sorted eigenvalues of one problem); the
    // cross-problem order is what breaks when the truncation is too small.
    let scale = edges
        .last()
        .map(|e| e.abs().max(1.0))
        .unwrap_or(1.0);
    for i in 1..edges.len() {
        if edges[i] < edges[i - 1] - 1e-9 * scale {
            return Err(HillError::Truncation { index: i, m_trunc });
        }
    }

    let gaps = (1..=k_spec)
        .map(|k| (edges[2 * k] - edges[2 * k - 1]).max(0.0))
        .collect();
    Ok(HillSpectrum { edges, gaps })
}

/// Gap-quadratic action estimator `I_k = c gamma_k^2 / k`. Valid in the
/// weakly nonlinear regime the calibration covers; produces no angles.
pub fn actions_from_gaps(spectrum: &HillSpectrum) -> ActionAngleState {
    let actions = spectrum
        .gaps
        .iter()
        .enumerate()
        .map(|(k0, &gap)| GAP_ACTION_CONSTANT * gap * gap / (k0 + 1) as f64)
        .collect();
    ActionAngleState::actions_only(actions)
}

/// Actions of the linearized coordinate map at the origin:
/// `I_k = (u_k^2 + u_{-k}^2) / (2k)`. Exact for the linearization, an
/// `O(amplitude^2)`-accurate estimate of the true actions.
pub fn linearized_actions(u: &SpectralField, m: usize) -> Result<ActionAngleState, FieldError> {
    if m > u.k_max() {
        return Err(FieldError::ModeOutOfRange {
            s: m as i64,
            k_max: u.k_max(),
        });
    }
    let actions = (1..=m)
        .map(|k| {
            let a = u.cos_coefficients()[k - 1];
            let b = u.sin_coefficients()[k - 1];
            (a * a + b * b) / (2.0 * k as f64)
        })
        .collect();
    Ok(ActionAngleState::actions_only(actions))
}

/// Angles of the linearized coordinate map: the full-quadrant arctangent of
/// `(u_{-k}, u_k)` in `[0, 2pi)` (the `|s|^{-1/2}` scalings cancel in the
/// ratio). Modes with `u_k^2 + u_{-k}^2 < angle_floor` are flagged
/// undefined, consistent with the angle degenerating where `I_k = 0`.
pub fn linearized_angles(
    u: &SpectralField,
    m: usize,
    angle_floor: f64,
) -> Result<ActionAngleState, FieldError> {
    if m > u.k_max() {
        return Err(FieldError::ModeOutOfRange {
            s: m as i64,
            k_max: u.k_max(),
        });
    }
    let mut angles = Vec::with_capacity(m);
    let mut defined = Vec::with_capacity(m);
    let mut actions = Vec::with_capacity(m);
    for k in 1..=m {
        let a = u.cos_coefficients()[k - 1];
        let b = u.sin_coefficients()[k - 1];
        let r_sq = a * a + b * b;
        actions.push(r_sq / (2.0 * k as f64));
        if r_sq < angle_floor {
            angles.push(0.0);
            defined.push(false);
        } else {
            let mut phi = b.atan2(a);
            if phi < 0.0 {
                phi += std::f64::consts::TAU;
            }
            // atan2(+0, negative) = pi, fine; normalize an exact 2pi down
            if phi >= std::f64::consts::TAU {
                phi -= std::f64::consts::TAU;
            }
            angles.push(phi);
            defined.push(true);
        }
    }
    Ok(ActionAngleState {
        actions,
        angles,
        angle_defined: defined,
    })
}

/// One design point of the gap-action calibration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationPoint {
    pub amplitude: f64,
    pub wavenumber: usize,
    pub gap: f64,
    pub linearized_action: f64,
    /// `linearized_action / (gap^2 / k)`
    pub ratio: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GapActionCalibration {
    /// Least-squares constant `c` over the design points.
    pub constant: f64,
    pub points: Vec<CalibrationPoint>,
    /// Worst relative prediction error when each point is predicted from a
    /// calibration that excludes it.
    pub leave_one_out_max_rel_err: f64,
}

/// Re-derive the gap-action constant on single-mode potentials
/// `a cos(k x)`. The stored [`GAP_ACTION_CONSTANT`] is pinned to the
/// small-amplitude limit of this regression.
pub fn calibrate_gap_action_constant(
    amplitudes: &[f64],
    wavenumbers: &[usize],
    k_spec: usize,
    m_trunc: usize,
) -> Result<GapActionCalibration, HillError> {
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut points = Vec::new();
    for &k in wavenumbers {
        for &a in amplitudes {
            let u = SpectralField::from_modes(&[(k as i64, a)], k_spec.max(k))
                .map_err(HillError::Field)?;
            let spectrum = band_edges(&u, k_spec, m_trunc)?;
            let gap = spectrum.gaps[k - 1];
            let x = gap * gap / k as f64;
            let y = a * a / (2.0 * k as f64);
            xs.push(x);
            ys.push(y);
            points.push(CalibrationPoint {
                amplitude: a,
                wavenumber: k,
                gap,
                linearized_action: y,
                ratio: y / x,
            });
        }
    }
    let fit = |skip: Option<usize>| -> f64 {
        let mut sxy = 0.0;
        let mut sxx = 0.0;
        for i in 0..xs.len() {
            if Some(i) == skip {
                continue;
            }
            sxy += xs[i] * ys[i];
            sxx += xs[i] * xs[i];
        }
        sxy / sxx
    };
    let constant = fit(None);
    let mut loo_max = 0.0f64;
    for i in 0..xs.len() {
        let c_i = fit(Some(i));
        let rel = (c_i * xs[i] - ys[i]).abs() / ys[i];
        loo_max = loo_max.max(rel);
    }
    Ok(GapActionCalibration {
        constant,
        points,
        leave_one_out_max_rel_err: loo_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn free_operator_band_edges() {
        let u = SpectralField::zeros(4);
        let spectrum = band_edges(&u, 16, 128).unwrap();
        // {0, 1/4,1/4, 1,1, 9/4,9/4, 4,4, ...}
        assert_abs_diff_eq!(spectrum.edges[0], 0.0, epsilon = 1e-10);
        for k in 1..=16usize {
            let expected = (k as f64 / 2.0).powi(2);
            assert_abs_diff_eq!(spectrum.edges[2 * k - 1], expected, epsilon = 1e-10);
            assert_abs_diff_eq!(spectrum.edges[2 * k], expected, epsilon = 1e-10);
            assert!(spectrum.gaps[k - 1].abs() < 1e-10);
        }
        let actions = actions_from_gaps(&spectrum);
        assert!(actions.actions.iter().all(|&i| i < 1e-18));
    }

    #[test]
    fn rejects_small_truncation() {
        let u = SpectralField::zeros(4);
        assert!(matches!(
            band_edges(&u, 8, 16),
            Err(HillError::TruncationBelowMinimum { .. })
        ));
    }

    #[test]
    fn single_cosine_opens_first_gap_only() {
        let a = 0.05;
        let u = SpectralField::from_modes(&[(1, a)], 4).unwrap();
        let spectrum = band_edges(&u, 6, 48).unwrap();
        // First-order perturbation: gamma_1 ~ a, higher gaps O(a^2).
        assert!(
            (spectrum.gaps[0] - a).abs() < 0.05 * a,
            "gamma_1 = {} vs a = {a}",
            spectrum.gaps[0]
        );
        for k in 2..=6 {
            assert!(
                spectrum.gaps[k - 1] < 3.0 * a * a,
                "gamma_{k} = {} not O(a^2)",
                spectrum.gaps[k - 1]
            );
        }
    }

    #[test]
    fn band_edges_translation_invariant() {
        let u = SpectralField::from_modes(&[(1, 0.3), (-2, 0.2), (3, -0.1)], 6).unwrap();
        let shifted = u.translate(1.234);
        let s0 = band_edges(&u, 4, 32).unwrap();
        let s1 = band_edges(&shifted, 4, 32).unwrap();
        for (e0, e1) in s0.edges.iter().zip(s1.edges.iter()) {
            assert_abs_diff_eq!(e0, e1, epsilon = 1e-10);
        }
    }

    #[test]
    fn eigenvalue_truncation_convergence() {
        let u = SpectralField::from_modes(&[(1, 0.4), (-2, 0.5), (4, 0.3)], 8).unwrap();
        assert!(u.sobolev_norm(2) <= 9.0);
        let coarse = band_edges(&u, 6, 32).unwrap();
        let fine = band_edges(&u, 6, 64).unwrap();
        for (a, b) in coarse.edges.iter().zip(fine.edges.iter()) {
            assert!(
                (a - b).abs() < 1e-8,
                "edge moved {} between M=32 and M=64",
                (a - b).abs()
            );
        }
    }

    #[test]
    fn linearized_actions_examples() {
        let zero = SpectralField::zeros(4);
        let st = linearized_actions(&zero, 4).unwrap();
        assert!(st.actions.iter().all(|&i| i == 0.0));

        // cos x -> I_1 = 1/2
        let f = SpectralField::from_modes(&[(1, 1.0)], 4).unwrap();
        let st = linearized_actions(&f, 4).unwrap();
        assert_abs_diff_eq!(st.actions[0], 0.5, epsilon = 1e-15);
        assert_eq!(st.actions[1], 0.0);

        // 0.5 sin 2x -> I_2 = 0.25 / 4 = 0.0625
        let g = SpectralField::from_modes(&[(-2, 0.5)], 4).unwrap();
        let st = linearized_actions(&g, 4).unwrap();
        assert_abs_diff_eq!(st.actions[1], 0.0625, epsilon = 1e-15);

        assert!(linearized_actions(&g, 5).is_err());
    }

    #[test]
    fn linearized_angles_convention() {
        let cosx = SpectralField::from_modes(&[(1, 1.0)], 4).unwrap();
        let st = linearized_angles(&cosx, 1, DEFAULT_ANGLE_FLOOR).unwrap();
        assert!(st.angle_defined[0]);
        assert_abs_diff_eq!(st.angles[0], 0.0, epsilon = 1e-15);

        let sinx = SpectralField::from_modes(&[(-1, 1.0)], 4).unwrap();
        let st = linearized_angles(&sinx, 1, DEFAULT_ANGLE_FLOOR).unwrap();
        assert_abs_diff_eq!(st.angles[0], PI / 2.0, epsilon = 1e-15);

        let zero = SpectralField::zeros(4);
        let st = linearized_angles(&zero, 4, DEFAULT_ANGLE_FLOOR).unwrap();
        assert!(st.angle_defined.iter().all(|d| !d));

        // angles live in [0, 2pi)
        let neg = SpectralField::from_modes(&[(1, 0.3), (-1, -0.3)], 4).unwrap();
        let st = linearized_angles(&neg, 1, DEFAULT_ANGLE_FLOOR).unwrap();
        assert!(st.angles[0] >= 0.0 && st.angles[0] < TAU);
        assert_abs_diff_eq!(st.angles[0], 7.0 * PI / 4.0, epsilon = 1e-12);
    }

    #[test]
    fn translation_shifts_angles_by_k_x0() {
        let u = SpectralField::from_modes(&[(1, 0.3), (-2, 0.2), (3, -0.15)], 6).unwrap();
        let x0 = 0.8371;
        let shifted = u.translate(x0);
        let before = linearized_angles(&u, 3, DEFAULT_ANGLE_FLOOR).unwrap();
        let after = linearized_angles(&shifted, 3, DEFAULT_ANGLE_FLOOR).unwrap();
        for k in 1..=3usize {
            let expected = (before.angles[k - 1] + k as f64 * x0).rem_euclid(TAU);
            let got = after.angles[k - 1];
            let wrapped = (got - expected).rem_euclid(TAU).min(
                (expected - got).rem_euclid(TAU),
            );
            assert!(wrapped < 1e-12, "mode {k}: {got} vs {expected}");
        }
        // actions are translation invariant on both routes
        let la = linearized_actions(&u, 3).unwrap();
        let lb = linearized_actions(&shifted, 3).unwrap();
        for k in 0..3 {
            assert_abs_diff_eq!(la.actions[k], lb.actions[k], epsilon = 1e-12);
        }
        let ga = actions_from_gaps(&band_edges(&u, 3, 24).unwrap());
        let gb = actions_from_gaps(&band_edges(&shifted, 3, 24).unwrap());
        for k in 0..3 {
            assert!((ga.actions[k] - gb.actions[k]).abs() < 1e-8);
        }
    }

    #[test]
    fn calibration_recovers_stored_constant() {
        let cal = calibrate_gap_action_constant(
            &[0.01, 0.02, 0.03, 0.04, 0.05],
            &[1, 2, 3],
            4,
            32,
        )
        .unwrap();
        assert!(
            (cal.constant - GAP_ACTION_CONSTANT).abs() < 0.01 * GAP_ACTION_CONSTANT,
            "calibrated {} vs stored {GAP_ACTION_CONSTANT}",
            cal.constant
        );
        assert!(cal.leave_one_out_max_rel_err < 0.05);
    }

    #[test]
    fn gap_vs_linearized_deviation_is_quadratic() {
        // relative deviation between the two action routes scales like a^2
        let amplitudes = [0.01, 0.02, 0.04];
        let mut devs = Vec::new();
        for &a in &amplitudes {
            let u = SpectralField::from_modes(&[(1, a)], 4).unwrap();
            let gap = actions_from_gaps(&band_edges(&u, 2, 32).unwrap()).actions[0];
            let lin = linearized_actions(&u, 1).unwrap().actions[0];
            devs.push(((gap - lin) / lin).abs());
        }
        let slope = (devs[2] / devs[0]).ln() / (amplitudes[2] / amplitudes[0]).ln();
        assert!(
            (1.5..=2.5).contains(&slope),
            "deviation slope {slope} not ~2 (devs {devs:?})"
        );
    }

    #[test]
    fn weighted_norm_definition() {
        let st = ActionAngleState::actions_only(vec![1.0, 0.5, 0.25]);
        // 2 * (1*1 + 2^{3} * 0.5 ... ) for p = 1: weights j^{3}
        let expected = 2.0 * (1.0 + 8.0 * 0.5 + 27.0 * 0.25);
        assert_abs_diff_eq!(st.weighted_norm(1), expected, epsilon = 1e-14);
        assert!(st.in_octant());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(100))]

        /// Interlacing and gap non-negativity for random smooth potentials
        /// with ||u||_2 <= 1.
        #[test]
        fn interlacing_holds_for_random_potentials(
            raw in proptest::collection::vec(-1.0f64..1.0, 8)
        ) {
            let k = 4;
            let mut u = SpectralField::zeros(k);
            for j in 0..k {
                // decay ensures ||u||_2 stays small
                let w = ((j + 1) as f64).powi(-3);
                u.set_coefficient((j + 1) as i64, raw[j] * w).unwrap();
                u.set_coefficient(-((j + 1) as i64), raw[k + j] * w).unwrap();
            }
            prop_assume!(u.sobolev_norm(2) <= 1.0);
            let spectrum = band_edges(&u, 4, 16).unwrap();
            for i in 1..spectrum.edges.len() {
                prop_assert!(spectrum.edges[i] >= spectrum.edges[i - 1] - 1e-10);
            }
            for &g in &spectrum.gaps {
                prop_assert!(g >= 0.0);
            }
        }
    }
}
