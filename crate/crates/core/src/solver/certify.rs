use super::SolverHandle;
use crate::error::{Error, Result};
use crate::matrix::{generalized_eigen_range, Cholesky, PdMatrix};
use crate::rng::{rng_from, Gaussian};
use nalgebra::{DMatrix, DVector};

/// Outcome of [`certify_solver`].
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    /// Spectral distance between Q^T M Q and M^{-1}.
    pub band: f64,
    pub allowed: f64,
    pub passed: bool,
    /// Largest relative M-norm gap between S(b) and Q b over the probes.
    pub linearity_gap: f64,
}

/// Recover the matrix Q behind a linear handle and check Q^T M Q against
/// M^{-1} with tolerance 4 sqrt(eps). Probes beyond the first `d` test
/// linearity on random vectors.
pub fn certify_solver(s: &SolverHandle, m: &PdMatrix, eps: f64, trials: usize, seed: u64) -> Result<Certificate> {
    if !s.is_linear() {
        return Err(Error::NotLinear("certification needs a linear solver".into()));
    }
    let d = m.dim();
    if s.dim() != d {
        return Err(Error::DimensionMismatch("solver and matrix differ in size".into()));
    }
    let q = s.solve_many(&DMatrix::identity(d, d), eps)?;
    let chol = Cholesky::new(m.matrix())?;
    let m_inv = chol.inverse();
    let qmq = q.transpose() * m.matrix() * &q;
    let (lo, hi) = generalized_eigen_range(&qmq, &m_inv)?;
    let band = if lo > 0.0 { hi.ln().max(-lo.ln()) } else { f64::INFINITY };
    let allowed = 4.0 * eps.sqrt();

    let mut g = Gaussian::new(rng_from(seed, &[0xce27]));
    let mut gap = 0.0f64;
    for _ in d..trials.max(d) {
        let mut b = DVector::zeros(d);
        g.fill(b.as_mut_slice());
        let y = s.solve(&b, eps)?;
        let diff = &y - &q * &b;
        let scale = m.quad(&y).max(f64::MIN_POSITIVE).sqrt();
        gap = gap.max(m.quad(&diff).sqrt() / scale);
    }
    if gap > 1e-8 {
        return Err(Error::NotLinear(format!("relative gap {gap:.3e} between S(b) and Qb")));
    }
    Ok(Certificate { band, allowed, passed: band <= allowed, linearity_gap: gap })
}

#[cfg(test)]
mod tests {
    use super::super::{exact_factorize, richardson_solver, DenseOp, LinearOp, RichardsonOptions};
    use super::*;
    use nalgebra::dmatrix;
    use std::sync::Arc;

    #[test]
    fn exact_and_richardson_certify() {
        let m = PdMatrix::new(dmatrix![4.0, 1.0, 0.0; 1.0, 3.0, 0.5; 0.0, 0.5, 2.0]).unwrap();
        let c = certify_solver(&exact_factorize(&m).unwrap(), &m, 1e-4, 6, 1).unwrap();
        assert!(c.passed && c.band < 1e-10);
        let mop: Arc<dyn LinearOp> = Arc::new(DenseOp::from(&m));
        let nop: Arc<dyn LinearOp> = Arc::new(DenseOp(DMatrix::identity(3, 3) * 0.3));
        let r = richardson_solver(mop, nop, RichardsonOptions::default()).unwrap();
        let c = certify_solver(&r, &m, 1e-4, 8, 2).unwrap();
        assert!(c.passed, "{c:?}");
    }
}
