//! Sample statistics for the experiment harness: Kolmogorov-Smirnov
//! distances, circular moments, small-value frequencies, and correlation
//! diagnostics. Every interval-carrying estimate reports its sample count.

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;

/// Two-sample Kolmogorov-Smirnov statistic `sup_x |F_a(x) - F_b(x)|`.
/// Non-finite values are rejected.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> Result<f64, HarnessError> {
    if a.is_empty() || b.is_empty() {
        return Err(HarnessError::EmptySamples(
            "two-sample KS needs nonempty samples".into(),
        ));
    }
    if a.iter().chain(b.iter()).any(|x| !x.is_finite()) {
        return Err(HarnessError::EmptySamples(
            "two-sample KS received non-finite values".into(),
        ));
    }
    let mut sa = a.to_vec();
    let mut sb = b.to_vec();
    sa.sort_by(f64::total_cmp);
    sb.sort_by(f64::total_cmp);
    let (na, nb) = (sa.len() as f64, sb.len() as f64);
    let mut ia = 0usize;
    let mut ib = 0usize;
    let mut fa = 0.0;
    let mut fb = 0.0;
    let mut d = 0.0f64;
    while ia < sa.len() && ib < sb.len() {
        let x = sa[ia].min(sb[ib]);
        while ia < sa.len() && sa[ia] == x {
            ia += 1;
        }
        while ib < sb.len() && sb[ib] == x {
            ib += 1;
        }
        fa = ia as f64 / na;
        fb = ib as f64 / nb;
        d = d.max((fa - fb).abs());
    }
    let _ = (fa, fb);
    Ok(d)
}

/// Asymptotic Kolmogorov critical coefficient `c(alpha) = sqrt(-ln(alpha/2)/2)`.
pub fn kolmogorov_coefficient(alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt()
}

/// Rejection threshold for the two-sample statistic at level `alpha`.
pub fn ks_two_sample_critical(n: usize, m: usize, alpha: f64) -> f64 {
    kolmogorov_coefficient(alpha) * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// One-sample Kolmogorov-Smirnov statistic against a reference CDF.
pub fn ks_one_sample<F>(samples: &[f64], cdf: F) -> Result<f64, HarnessError>
where
    F: Fn(f64) -> f64,
{
    if samples.is_empty() {
        return Err(HarnessError::EmptySamples(
            "one-sample KS needs nonempty samples".into(),
        ));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in xs.iter().enumerate() {
        let f = cdf(x);
        d = d.max(((i + 1) as f64 / n - f).abs());
        d = d.max((f - i as f64 / n).abs());
    }
    Ok(d)
}

pub fn ks_one_sample_critical(n: usize, alpha: f64) -> f64 {
    kolmogorov_coefficient(alpha) / (n as f64).sqrt()
}

/// Coordinatewise two-sample KS distance between two sets of vectors: the
/// maximum over coordinates. A weak-convergence proxy on marginals, not a
/// metric on joint laws.
pub fn law_distance(a: &[Vec<f64>], b: &[Vec<f64>]) -> Result<f64, HarnessError> {
    if a.is_empty() || b.is_empty() {
        return Err(HarnessError::EmptySamples(
            "law distance needs nonempty ensembles".into(),
        ));
    }
    let dim = a[0].len();
    for v in a.iter().chain(b.iter()) {
        if v.len() != dim {
            return Err(HarnessError::SampleDimensionMismatch {
                left: dim,
                right: v.len(),
            });
        }
    }
    let mut worst = 0.0f64;
    for j in 0..dim {
        let col_a: Vec<f64> = a.iter().map(|v| v[j]).collect();
        let col_b: Vec<f64> = b.iter().map(|v| v[j]).collect();
        worst = worst.max(ks_two_sample(&col_a, &col_b)?);
    }
    Ok(worst)
}

/// Magnitude of the first circular moment `|mean of e^{i phi}|`.
pub fn circular_first_moment(angles: &[f64]) -> f64 {
    if angles.is_empty() {
        return 0.0;
    }
    let n = angles.len() as f64;
    let (mut c, mut s) = (0.0, 0.0);
    for &phi in angles {
        c += phi.cos();
        s += phi.sin();
    }
    ((c / n).powi(2) + (s / n).powi(2)).sqrt()
}

/// One-sample KS statistic of angles against the uniform law on `[0, 2pi)`.
pub fn uniform_angle_ks(angles: &[f64]) -> Result<f64, HarnessError> {
    let tau = std::f64::consts::TAU;
    let wrapped: Vec<f64> = angles.iter().map(|p| p.rem_euclid(tau)).collect();
    ks_one_sample(&wrapped, |x| (x / tau).clamp(0.0, 1.0))
}

/// Binomial frequency with a 95% Wilson confidence interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct BinomialEstimate {
    pub frequency: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub successes: usize,
    pub n: usize,
}

pub fn binomial_estimate(successes: usize, n: usize) -> BinomialEstimate {
    assert!(n > 0, "binomial estimate needs n > 0");
    let z = 1.959_963_984_540_054f64;
    let nf = n as f64;
    let p = successes as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt() / denom;
    BinomialEstimate {
        frequency: p,
        ci_low: (center - half).max(0.0),
        ci_high: (center + half).min(1.0),
        successes,
        n,
    }
}

/// Empirical frequency of `{x < delta}` with its confidence interval.
pub fn small_value_probability(samples: &[f64], delta: f64) -> BinomialEstimate {
    let hits = samples.iter().filter(|&&x| x < delta).count();
    binomial_estimate(hits, samples.len())
}

/// Pearson correlation with a Fisher-z 95% confidence interval.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct CorrelationEstimate {
    pub r: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub n: usize,
}

impl CorrelationEstimate {
    pub fn ci_contains_zero(&self) -> bool {
        self.ci_low <= 0.0 && self.ci_high >= 0.0
    }
}

pub fn pearson_correlation(x: &[f64], y: &[f64]) -> Result<CorrelationEstimate, HarnessError> {
    if x.len() != y.len() {
        return Err(HarnessError::SampleDimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    let n = x.len();
    if n < 4 {
        return Err(HarnessError::EmptySamples(
            "correlation needs at least 4 points".into(),
        ));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for i in 0..n {
        let dx = x[i] - mx;
        let dy = y[i] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    let r = if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)
    };
    let z = 0.5 * ((1.0 + r) / (1.0 - r).max(1e-300)).ln();
    let half = 1.959_963_984_540_054 / (nf - 3.0).sqrt();
    Ok(CorrelationEstimate {
        r,
        ci_low: ((z - half).tanh()),
        ci_high: ((z + half).tanh()),
        n,
    })
}

pub fn median(samples: &[f64]) -> f64 {
    assert!(!samples.is_empty());
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

/// Sample mean and its standard error.
pub fn mean_and_se(samples: &[f64]) -> (f64, f64) {
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() < 2 {
        return (mean, f64::INFINITY);
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha12Rng;
    use std::f64::consts::TAU;

    #[test]
    fn ks_identical_samples_is_zero() {
        let a = vec![1.0, 2.0, 3.0, 4.0];
        assert_eq!(ks_two_sample(&a, &a).unwrap(), 0.0);
        assert_eq!(law_distance(&[vec![1.0], vec![2.0]], &[vec![1.0], vec![2.0]]).unwrap(), 0.0);
    }

    #[test]
    fn ks_disjoint_samples_is_one() {
        let a = vec![0.0, 0.1, 0.2];
        let b = vec![5.0, 5.1, 5.2];
        assert_eq!(ks_two_sample(&a, &b).unwrap(), 1.0);
    }

    #[test]
    fn ks_dimension_mismatch_rejected() {
        let a = vec![vec![1.0, 2.0]];
        let b = vec![vec![1.0]];
        assert!(law_distance(&a, &b).is_err());
        assert!(ks_two_sample(&[], &[1.0]).is_err());
    }

    #[test]
    fn ks_same_law_below_critical() {
        // two 1e4 draws from the same exponential law: not rejected at 1%
        let draw = |seed: u64| -> Vec<f64> {
            let mut rng = ChaCha12Rng::seed_from_u64(seed);
            (0..10_000)
                .map(|_| -(1.0 - rng.random::<f64>()).ln() * 0.5)
                .collect()
        };
        let a = draw(1);
        let b = draw(2);
        let d = ks_two_sample(&a, &b).unwrap();
        let crit = ks_two_sample_critical(a.len(), b.len(), 0.01);
        assert!(d < crit, "D = {d} vs critical {crit}");
    }

    #[test]
    fn kolmogorov_coefficient_values() {
        assert!((kolmogorov_coefficient(0.01) - 1.6276).abs() < 1e-3);
        assert!((kolmogorov_coefficient(0.05) - 1.3581).abs() < 1e-3);
    }

    #[test]
    fn one_sample_ks_uniform() {
        let angles: Vec<f64> = (0..1000).map(|i| TAU * (i as f64 + 0.5) / 1000.0).collect();
        let d = uniform_angle_ks(&angles).unwrap();
        assert!(d < 1e-3, "grid angles should be nearly exactly uniform: {d}");
    }

    #[test]
    fn circular_moment_extremes() {
        let grid: Vec<f64> = (0..64).map(|i| TAU * i as f64 / 64.0).collect();
        assert!(circular_first_moment(&grid) < 1e-12);
        let constant = vec![1.3; 50];
        assert!((circular_first_moment(&constant) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn circular_moment_of_uniform_draws() {
        let mut rng = ChaCha12Rng::seed_from_u64(10);
        let angles: Vec<f64> = (0..10_000).map(|_| rng.random::<f64>() * TAU).collect();
        // CLT: |m_1| ~ 1/sqrt(n); 3/sqrt(n) = 0.03
        assert!(circular_first_moment(&angles) < 0.03);
    }

    #[test]
    fn small_value_probability_extremes() {
        let above = vec![1.0, 2.0, 3.0];
        let est = small_value_probability(&above, 0.5);
        assert_eq!(est.frequency, 0.0);
        let below = vec![0.1, 0.2, 0.3];
        let est = small_value_probability(&below, 0.5);
        assert_eq!(est.frequency, 1.0);
        assert!(est.ci_low <= 1.0 && est.ci_high >= est.ci_low);
    }

    #[test]
    fn correlation_detects_independence_and_dependence() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let x: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let y: Vec<f64> = (0..2000).map(|_| rng.random::<f64>()).collect();
        let est = pearson_correlation(&x, &y).unwrap();
        assert!(est.ci_contains_zero(), "independent data: r = {}", est.r);

        let y2: Vec<f64> = x.iter().map(|v| 2.0 * v + 0.1).collect();
        let est = pearson_correlation(&x, &y2).unwrap();
        assert!(est.r > 0.999);
        assert!(!est.ci_contains_zero());
    }

    #[test]
    fn median_even_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
