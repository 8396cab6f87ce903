//! Quadrature over the angle torus and along Kronecker flow lines.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use std::f64::consts::TAU;

/// Quadrature configuration for angle averages.
///
/// Up to `max_tensor_dim` angles the average uses the tensor-product
/// trapezoid rule on the torus (equal weights on a uniform grid), which is
/// exact for trigonometric polynomials of degree below the node count per
/// angle. Beyond that it switches to randomly shifted low-discrepancy
/// (Kronecker lattice) sampling.
#[derive(Debug, Clone, Copy)]
pub struct QuadratureConfig {
    pub nodes_per_angle: usize,
    pub max_tensor_dim: usize,
    pub qmc_samples: usize,
    /// Number of independent random shifts used both to scramble the
    /// lattice and to estimate the error.
    pub qmc_shifts: usize,
    pub qmc_seed: u64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        QuadratureConfig {
            nodes_per_angle: 32,
            max_tensor_dim: 4,
            qmc_samples: 1 << 14,
            qmc_shifts: 8,
            qmc_seed: 0x6b7a_95c1_0f23_d84d,
        }
    }
}

/// A quadrature value with a crude error estimate (difference against a
/// coarser rule for tensor grids, shift-to-shift scatter for QMC).
#[derive(Debug, Clone, Copy)]
pub struct QuadResult {
    pub value: f64,
    pub error_estimate: f64,
}

/// Average `g` over the `m`-torus with respect to Haar measure.
pub fn torus_average<G>(g: G, m: usize, quad: &QuadratureConfig) -> QuadResult
where
    G: FnMut(&[f64]) -> f64,
{
    if m == 0 {
        let mut g = g;
        return QuadResult {
            value: g(&[]),
            error_estimate: 0.0,
        };
    }
    if m <= quad.max_tensor_dim {
        tensor_average(g, m, quad.nodes_per_angle.max(2))
    } else {
        lattice_average(g, m, quad)
    }
}

fn tensor_average<G>(mut g: G, m: usize, nodes: usize) -> QuadResult
where
    G: FnMut(&[f64]) -> f64,
{
    let step = TAU / nodes as f64;
    let total = nodes.pow(m as u32);
    let mut angles = vec![0.0f64; m];
    let mut idx = vec![0usize; m];
    let mut sum = 0.0;
    let mut coarse_sum = 0.0;
    let mut coarse_count = 0usize;
    for flat in 0..total {
        let mut rem = flat;
        let mut all_even = nodes % 2 == 0;
        for j in 0..m {
            let d = rem % nodes;
            rem /= nodes;
            idx[j] = d;
            angles[j] = d as f64 * step;
            if d % 2 != 0 {
                all_even = false;
            }
        }
        let v = g(&angles);
        sum += v;
        if all_even {
            coarse_sum += v;
            coarse_count += 1;
        }
    }
    let value = sum / total as f64;
    let error_estimate = if coarse_count > 0 {
        (value - coarse_sum / coarse_count as f64).abs()
    } else {
        0.0
    };
    QuadResult {
        value,
        error_estimate,
    }
}

/// Direction vector of the rank-1 Kronecker lattice: powers of the
/// generalized golden ratio, a standard well-distributed choice.
fn kronecker_alphas(m: usize) -> Vec<f64> {
    // phi_m solves x^{m+1} = x + 1
    let mut phi = 1.5f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (m as f64 + 1.0));
    }
    let mut alphas = Vec::with_capacity(m);
    let mut a = 1.0;
    for _ in 0..m {
        a /= phi;
        alphas.push(a.fract());
    }
    alphas
}

fn lattice_average<G>(mut g: G, m: usize, quad: &QuadratureConfig) -> QuadResult
where
    G: FnMut(&[f64]) -> f64,
{
    let shifts = quad.qmc_shifts.max(2);
    let per_shift = (quad.qmc_samples / shifts).max(16);
    let alphas = kronecker_alphas(m);
    let mut rng = ChaCha12Rng::seed_from_u64(quad.qmc_seed);
    let mut angles = vec![0.0f64; m];
    let mut block_means = Vec::with_capacity(shifts);
    for _ in 0..shifts {
        let shift: Vec<f64> = (0..m).map(|_| rng.random::<f64>()).collect();
        let mut sum = 0.0;
        for i in 0..per_shift {
            for j in 0..m {
                angles[j] = TAU * (shift[j] + i as f64 * alphas[j]).fract();
            }
            sum += g(&angles);
        }
        block_means.push(sum / per_shift as f64);
    }
    let value = block_means.iter().sum::<f64>() / shifts as f64;
    let var = block_means
        .iter()
        .map(|b| (b - value) * (b - value))
        .sum::<f64>()
        / (shifts as f64 - 1.0);
    QuadResult {
        value,
        error_estimate: (var / shifts as f64).sqrt(),
    }
}

const GL10_NODES: [f64; 5] = [
    0.148_874_338_981_631_2,
    0.433_395_394_129_247_2,
    0.679_409_568_299_024_4,
    0.865_063_366_688_984_5,
    0.973_906_528_517_171_7,
];
const GL10_WEIGHTS: [f64; 5] = [
    0.295_524_224_714_752_9,
    0.269_266_719_309_996_3,
    0.219_086_362_515_982_0,
    0.149_451_349_150_580_6,
    0.066_671_344_308_688_14,
];

/// `(1/T) int_0^T g(t) dt` by composite 10-point Gauss-Legendre panels,
/// refined until two successive panel counts agree. `scale_hint` should be
/// an upper bound on the fastest angular speed in `g` so the initial panels
/// resolve the oscillation.
pub fn time_average<G>(mut g: G, t_final: f64, scale_hint: f64) -> QuadResult
where
    G: FnMut(f64) -> f64,
{
    assert!(t_final > 0.0, "time average needs T > 0");
    let char_len = if scale_hint > 0.0 {
        (TAU / scale_hint) / 4.0
    } else {
        t_final
    };
    let mut n_panels = ((t_final / char_len).ceil() as usize).clamp(4, 2_000_000);
    let integrate = |g: &mut G, n: usize| -> f64 {
        let h = t_final / n as f64;
        let mut total = 0.0;
        for p in 0..n {
            let mid = (p as f64 + 0.5) * h;
            let half = 0.5 * h;
            let mut panel = 0.0;
            for i in 0..5 {
                panel += GL10_WEIGHTS[i]
                    * (g(mid + half * GL10_NODES[i]) + g(mid - half * GL10_NODES[i]));
            }
            total += panel * half;
        }
        total
    };
    let mut coarse = integrate(&mut g, n_panels);
    loop {
        n_panels *= 2;
        let fine = integrate(&mut g, n_panels);
        let err = (fine - coarse).abs() / t_final;
        if err < 1e-11 * (1.0 + (fine / t_final).abs()) || n_panels > 4_000_000 {
            return QuadResult {
                value: fine / t_final,
                error_estimate: err,
            };
        }
        coarse = fine;
    }
}
