//! Randomness hiding: a linear solver for A^T A plus Gaussian noise whose
//! scale depends only on the answer, so the output law is close to a fixed
//! distribution centred at the exact solution.

use crate::error::{Error, Result};
use crate::matrix::{Cholesky, ConstraintMatrix, PdMatrix};
use crate::rng::{rng_from, Gaussian};
use crate::solver::{Provenance, Solve, SolverHandle};
use nalgebra::{DMatrix, DVector};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

const EPS_FLOOR: f64 = 1e-300;

/// Wraps a linear solver `base` for A^T diag(w) A. `scale` holds sqrt(w)
/// (all ones when absent).
pub struct NoisyHandle {
    base: SolverHandle,
    a: Arc<ConstraintMatrix>,
    scale: Option<Vec<f64>>,
    seed: u64,
    counter: AtomicU64,
}

impl NoisyHandle {
    pub fn new(base: SolverHandle, a: Arc<ConstraintMatrix>, scale: Option<Vec<f64>>, seed: u64) -> Result<Self> {
        if !base.is_linear() {
            return Err(Error::NotLinear("the noisy wrapper needs a linear base solver".into()));
        }
        if base.dim() != a.ncols() || scale.as_ref().is_some_and(|s| s.len() != a.nrows()) {
            return Err(Error::DimensionMismatch("noisy wrapper inputs".into()));
        }
        Ok(NoisyHandle { base, a, scale, seed, counter: AtomicU64::new(0) })
    }

    pub fn n(&self) -> usize {
        self.a.nrows()
    }

    pub fn d(&self) -> usize {
        self.a.ncols()
    }

    /// Accuracies requested from the base solver for the answer and for
    /// the noise direction.
    pub fn inner_eps(&self, eps: f64) -> (f64, f64) {
        let n = self.n() as f64;
        let d = self.d() as f64;
        let e1 = eps * (32.0 * n.powi(7)).powi(-2);
        let e2 = (12.0 * d * n.powi(6)).powi(-2);
        (e1.max(EPS_FLOOR), e2.max(EPS_FLOOR))
    }

    fn norm_a(&self, y: &DVector<f64>) -> f64 {
        let ay = self.a.apply(y);
        match &self.scale {
            None => ay.norm(),
            Some(s) => ay.iter().zip(s).map(|(v, w)| (v * w) * (v * w)).sum::<f64>().sqrt(),
        }
    }

    fn noise_rhs(&self, g: &mut Gaussian<crate::rng::SeededRng>) -> DVector<f64> {
        let mut eta = DVector::zeros(self.n());
        g.fill(eta.as_mut_slice());
        if let Some(s) = &self.scale {
            eta.component_mul_assign(&DVector::from_column_slice(s));
        }
        self.a.apply_t(&eta)
    }

    pub fn solve(&self, b: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::InvalidAccuracy(eps));
        }
        let call = self.counter.fetch_add(1, Ordering::SeqCst);
        let mut g = Gaussian::new(rng_from(self.seed, &[0x0e15e, call]));
        let (e1, e2) = self.inner_eps(eps);
        let y1 = self.base.solve(b, e1)?;
        let rhs = self.noise_rhs(&mut g);
        let y2 = self.base.solve(&rhs, e2)?;
        let alpha = 0.125 * (eps / self.n() as f64).sqrt() * self.norm_a(&y1);
        Ok(y1 + y2 * alpha)
    }

    pub fn into_handle(self) -> SolverHandle {
        SolverHandle::new(Arc::new(self), Provenance::Noisy, false)
    }
}

impl Solve for NoisyHandle {
    fn dim(&self) -> usize {
        self.d()
    }
    fn solve(&self, b: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
        NoisyHandle::solve(self, b, eps)
    }
    fn solve_many(&self, b: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.d(), b.ncols());
        for j in 0..b.ncols() {
            out.set_column(j, &NoisyHandle::solve(self, &b.column(j).into_owned(), eps)?);
        }
        Ok(out)
    }
    fn cost(&self, eps: f64) -> u64 {
        let (e1, e2) = self.inner_eps(eps);
        self.base.cost_estimate(e1) + self.base.cost_estimate(e2) + 2 * self.a.nnz() as u64
    }
}

/// Noisy solver for A^T A built from the linear solver `base`.
pub fn noisy_solver(base: SolverHandle, a: Arc<ConstraintMatrix>, seed: u64) -> Result<SolverHandle> {
    Ok(NoisyHandle::new(base, a, None, seed)?.into_handle())
}

/// Reference law: M^{-1} b plus Gaussian noise with covariance
/// beta^2 M^{-1}, beta = (1/8) sqrt(eps / n) ||M^{-1} b||_M.
pub fn ideal_solve(m: &PdMatrix, n: usize, b: &DVector<f64>, eps: f64, seed: u64) -> Result<DVector<f64>> {
    let chol = Cholesky::new(m.matrix())?;
    let x = chol.solve(b);
    let beta = 0.125 * (eps / n as f64).sqrt() * m.quad(&x).max(0.0).sqrt();
    let mut g = Gaussian::new(rng_from(seed, &[0x1dea]));
    let mut z = DVector::zeros(m.dim());
    g.fill(z.as_mut_slice());
    Ok(x + chol.backward(&z) * beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::gram_product;
    use crate::matrix::WeightVector;
    use crate::solver::exact_factorize;

    fn setup() -> (Arc<ConstraintMatrix>, PdMatrix) {
        let rows = vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![1.0, 1.0], vec![-1.0, 3.0]];
        let a = Arc::new(ConstraintMatrix::from_rows(&rows).unwrap());
        let m = gram_product(&a, &WeightVector::ones(4)).unwrap();
        (a, m)
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let (a, m) = setup();
        let h = noisy_solver(exact_factorize(&m).unwrap(), a, 1).unwrap();
        assert_eq!(h.solve(&DVector::zeros(2), 0.25).unwrap(), DVector::zeros(2));
        assert!(!h.is_linear());
        assert_eq!(h.provenance(), Provenance::Noisy);
    }

    #[test]
    fn reproducible_given_seed() {
        let (a, m) = setup();
        let b = DVector::from_vec(vec![1.0, -1.0]);
        let h1 = noisy_solver(exact_factorize(&m).unwrap(), a.clone(), 5).unwrap();
        let h2 = noisy_solver(exact_factorize(&m).unwrap(), a, 5).unwrap();
        let x1 = h1.solve(&b, 0.1).unwrap();
        assert_eq!(x1, h2.solve(&b, 0.1).unwrap());
        assert_ne!(x1, h1.solve(&b, 0.1).unwrap());
    }

    #[test]
    fn ideal_vanishing_noise() {
        let (_, m) = setup();
        let b = DVector::from_vec(vec![1.0, 2.0]);
        let x = ideal_solve(&m, 4, &b, 1e-12, 3).unwrap();
        let exact = m.matrix().clone().try_inverse().unwrap() * &b;
        assert!((x - exact).amax() < 1e-5);
    }

    #[test]
    fn inner_accuracies() {
        let (a, m) = setup();
        let h = NoisyHandle::new(exact_factorize(&m).unwrap(), a, None, 0).unwrap();
        let (e1, e2) = h.inner_eps(0.25);
        assert!((e1 - 0.25 / (32.0 * 4f64.powi(7)).powi(2)).abs() <= 1e-12 * e1);
        assert!((e2 - 1.0 / (24.0 * 4f64.powi(6)).powi(2)).abs() <= 1e-12 * e2);
    }
}
