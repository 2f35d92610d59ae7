use crate::error::{Error, Result};
use crate::matrix::{ConstraintMatrix, WeightVector};
use crate::rng::{fill_signs, rng_from};
use crate::solver::SolverHandle;
use nalgebra::DMatrix;

/// Parameters of the random-projection leverage estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LeverageConfig {
    /// Target multiplicative accuracy of each score.
    pub eps_tau: f64,
    /// Probe count is `ceil(c_jl * ln n / eps_tau^2)`.
    pub c_jl: f64,
    /// Probes generated per batch.
    pub block: usize,
}

impl Default for LeverageConfig {
    fn default() -> Self {
        LeverageConfig { eps_tau: 0.1, c_jl: 8.0, block: 256 }
    }
}

impl LeverageConfig {
    pub fn probes(&self, n: usize) -> usize {
        let ln = (n as f64).ln().max(1.0);
        (self.c_jl * ln / (self.eps_tau * self.eps_tau)).ceil() as usize
    }

    /// Accuracy requested from the solver for each probe.
    pub fn inner_eps(&self, n: usize) -> f64 {
        let n = n as f64;
        (self.eps_tau * self.eps_tau / (16.0 * n.powi(4))).clamp(1e-300, 0.5)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LeverageEstimate {
    pub tau: Vec<f64>,
    pub probes: usize,
}

/// Estimate the leverage scores of diag(w)^{1/2} A using a solver for
/// A^T diag(w) A and random sign probes.
///
/// For a linear solver Q the estimator sum_j (a_i^T Q y_j)^2 equals
/// a_i^T Q (Y Y^T) Q a_i, so only 2d solves are needed instead of one per
/// probe.
pub fn estimate_leverage(
    a: &ConstraintMatrix,
    w: &WeightVector,
    solver: &SolverHandle,
    cfg: &LeverageConfig,
    seed: u64,
) -> Result<LeverageEstimate> {
    let (n, d) = (a.nrows(), a.ncols());
    if w.len() != n || solver.dim() != d {
        return Err(Error::DimensionMismatch("leverage estimation inputs".into()));
    }
    if !(cfg.eps_tau > 0.0 && cfg.eps_tau < 1.0) {
        return Err(Error::InvalidArgument(format!("eps_tau must lie in (0, 1), got {}", cfg.eps_tau)));
    }
    let k = cfg.probes(n);
    let eps_in = cfg.inner_eps(n);
    let sqrt_w: Vec<f64> = w.as_slice().iter().map(|x| x.sqrt()).collect();
    let block = cfg.block.max(1);
    let mut yyt = DMatrix::<f64>::zeros(d, d);
    let mut zzt = DMatrix::<f64>::zeros(d, d);
    let mut signs = vec![0.0; block];
    let mut yb = vec![0.0; d * block];
    let mut done = 0;
    let mut blk = 0u64;
    while done < k {
        let bsz = block.min(k - done);
        let mut rng = rng_from(seed, &[0x1e7, blk]);
        yb[..d * bsz].iter_mut().for_each(|v| *v = 0.0);
        for i in 0..n {
            fill_signs(&mut rng, &mut signs[..bsz]);
            let s = sqrt_w[i];
            if s == 0.0 {
                continue;
            }
            let (c, x) = a.row(i);
            for (&j, &v) in c.iter().zip(x) {
                let coef = s * v;
                let dst = &mut yb[j * bsz..(j + 1) * bsz];
                for (t, g) in dst.iter_mut().zip(&signs[..bsz]) {
                    *t += coef * g;
                }
            }
        }
        // Column-major d x bsz view of the row-major buffer.
        let y = DMatrix::from_row_slice(d, bsz, &yb[..d * bsz]);
        if solver.is_linear() {
            yyt += &y * y.transpose();
        } else {
            let z = solver.solve_many(&y, eps_in)?;
            zzt += &z * z.transpose();
        }
        done += bsz;
        blk += 1;
    }
    if solver.is_linear() {
        let x = solver.solve_many(&yyt, eps_in)?;
        zzt = solver.solve_many(&x.transpose(), eps_in)?;
    }
    let wmat = (&zzt + zzt.transpose()) * (0.5 / k as f64);
    let mut tau = vec![1e-12; n];
    for (i, t) in tau.iter_mut().enumerate() {
        if w[i] == 0.0 {
            continue;
        }
        let (c, x) = a.row(i);
        let mut q = 0.0;
        for (p, &j) in c.iter().enumerate() {
            let mut s = 0.0;
            for (&l, &v) in c.iter().zip(x) {
                s += wmat[(j, l)] * v;
            }
            q += x[p] * s;
        }
        *t = (w[i] * q).clamp(1e-12, 1.0);
    }
    Ok(LeverageEstimate { tau, probes: k })
}
