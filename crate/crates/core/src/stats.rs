//! Sample moments and a two-sample energy distance test.

use nalgebra::{DMatrix, DVector};

pub fn mean(samples: &[DVector<f64>]) -> DVector<f64> {
    let d = samples[0].len();
    let mut m = DVector::zeros(d);
    for s in samples {
        m += s;
    }
    m / samples.len() as f64
}

/// Sample covariance (divisor N - 1).
pub fn covariance(samples: &[DVector<f64>]) -> DMatrix<f64> {
    let mu = mean(samples);
    let d = mu.len();
    let mut c = DMatrix::zeros(d, d);
    for s in samples {
        let z = s - &mu;
        c += &z * z.transpose();
    }
    c / (samples.len() as f64 - 1.0)
}

/// Standard errors of the sample mean and of each covariance entry.
pub fn standard_errors(samples: &[DVector<f64>]) -> (DVector<f64>, DMatrix<f64>) {
    let n = samples.len() as f64;
    let mu = mean(samples);
    let cov = covariance(samples);
    let d = mu.len();
    let se_mean = DVector::from_fn(d, |i, _| (cov[(i, i)] / n).sqrt());
    let mut var = DMatrix::zeros(d, d);
    for s in samples {
        let z = s - &mu;
        for i in 0..d {
            for j in 0..d {
                let t = z[i] * z[j] - cov[(i, j)];
                var[(i, j)] += t * t;
            }
        }
    }
    let se_cov = var.map(|v: f64| (v / (n - 1.0) / n).sqrt());
    (se_mean, se_cov)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyTest {
    /// Mean of the per-block unbiased energy statistics.
    pub statistic: f64,
    /// Standardised mean; large values indicate different laws.
    pub z: f64,
    pub blocks: usize,
}

impl EnergyTest {
    /// One-sided rejection at level alpha, from the normal quantile.
    pub fn rejects(&self, z_crit: f64) -> bool {
        self.z > z_crit
    }
}

/// Split both samples into blocks of `block` points and compute the
/// unbiased energy distance 2E|X-Y| - E|X-X'| - E|Y-Y'| within each.
/// The block values are independent with mean zero when both samples share
/// a law, so their standardised mean is approximately standard normal.
pub fn energy_block_test(x: &[DVector<f64>], y: &[DVector<f64>], block: usize) -> EnergyTest {
    let blocks = x.len().min(y.len()) / block;
    assert!(blocks >= 2 && block >= 2, "not enough samples for the block test");
    let mut vals = Vec::with_capacity(blocks);
    for b in 0..blocks {
        let xs = &x[b * block..(b + 1) * block];
        let ys = &y[b * block..(b + 1) * block];
        let m = block as f64;
        let mut xy = 0.0;
        for p in xs {
            for q in ys {
                xy += (p - q).norm();
            }
        }
        let within = |s: &[DVector<f64>]| {
            let mut t = 0.0;
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    t += (&s[i] - &s[j]).norm();
                }
            }
            2.0 * t / (m * (m - 1.0))
        };
        vals.push(2.0 * xy / (m * m) - within(xs) - within(ys));
    }
    let k = vals.len() as f64;
    let mu = vals.iter().sum::<f64>() / k;
    let var = vals.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / (k - 1.0);
    EnergyTest { statistic: mu, z: mu / (var / k).sqrt(), blocks }
}
