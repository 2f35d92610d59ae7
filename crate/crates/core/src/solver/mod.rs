//! Solver handles: opaque objects that return approximate solutions of
//! M x = b to a requested accuracy in the M-norm.

mod certify;
mod richardson;

pub use certify::{certify_solver, Certificate};
pub use richardson::{
    estimate_spectrum, resolve_l, richardson_operator, richardson_solver, richardson_steps, RichardsonOp,
    RichardsonOptions,
};

use crate::error::{Error, Result};
use crate::matrix::{Cholesky, PdMatrix};
use nalgebra::{DMatrix, DVector};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

/// A symmetric linear operator on R^d.
pub trait LinearOp: Send + Sync {
    fn dim(&self) -> usize;
    fn apply(&self, x: &DVector<f64>) -> DVector<f64>;
    fn apply_many(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.dim(), x.ncols());
        for j in 0..x.ncols() {
            out.set_column(j, &self.apply(&x.column(j).into_owned()));
        }
        out
    }
    /// Rough multiply-add count of one application.
    fn cost(&self) -> u64 {
        (self.dim() * self.dim()) as u64
    }
}

/// An explicit dense operator.
pub struct DenseOp(pub DMatrix<f64>);

impl LinearOp for DenseOp {
    fn dim(&self) -> usize {
        self.0.nrows()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0 * x
    }
    fn apply_many(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        &self.0 * x
    }
}

impl From<&PdMatrix> for DenseOp {
    fn from(m: &PdMatrix) -> Self {
        DenseOp(m.matrix().clone())
    }
}

/// x -> M^{-1} x through a Cholesky factor.
pub struct CholeskyInverseOp(pub Cholesky);

impl LinearOp for CholeskyInverseOp {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        self.0.solve(x)
    }
}

/// The backend behind a [`SolverHandle`].
pub trait Solve: Send + Sync {
    fn dim(&self) -> usize;
    fn solve(&self, b: &DVector<f64>, eps: f64) -> Result<DVector<f64>>;
    fn solve_many(&self, b: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
        let mut out = DMatrix::zeros(self.dim(), b.ncols());
        for j in 0..b.ncols() {
            out.set_column(j, &self.solve(&b.column(j).into_owned(), eps)?);
        }
        Ok(out)
    }
    fn cost(&self, eps: f64) -> u64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    Exact,
    Richardson,
    Maintained,
    Noisy,
}

/// Shared round counter. Handles issued under a generation refuse to run
/// after it advances.
#[derive(Debug, Clone, Default)]
pub struct Generation(Arc<AtomicU64>);

impl Generation {
    pub fn new() -> Self {
        Self::default()
    }
    pub fn current(&self) -> u64 {
        self.0.load(Ordering::SeqCst)
    }
    pub fn advance(&self) -> u64 {
        self.0.fetch_add(1, Ordering::SeqCst) + 1
    }
}

#[derive(Clone)]
struct Guard {
    generation: Generation,
    issued: u64,
}

/// Approximate solver for M x = b with
/// `||S(b, eps) - M^{-1} b||_M^2 <= eps ||M^{-1} b||_M^2`.
#[derive(Clone)]
pub struct SolverHandle {
    backend: Arc<dyn Solve>,
    provenance: Provenance,
    linear: bool,
    guard: Option<Guard>,
    calls: Arc<AtomicU64>,
}

impl std::fmt::Debug for SolverHandle {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SolverHandle")
            .field("dim", &self.dim())
            .field("provenance", &self.provenance)
            .field("linear", &self.linear)
            .finish()
    }
}

impl SolverHandle {
    pub fn new(backend: Arc<dyn Solve>, provenance: Provenance, linear: bool) -> Self {
        SolverHandle { backend, provenance, linear, guard: None, calls: Arc::new(AtomicU64::new(0)) }
    }

    /// Tie this handle to `generation` as it stands now.
    pub fn guarded(mut self, generation: &Generation) -> Self {
        self.guard = Some(Guard { generation: generation.clone(), issued: generation.current() });
        self
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }

    pub fn dim(&self) -> usize {
        self.backend.dim()
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_linear(&self) -> bool {
        self.linear
    }

    /// Work estimate of one call at accuracy `eps`.
    pub fn cost_estimate(&self, eps: f64) -> u64 {
        self.backend.cost(eps)
    }

    /// Number of solves performed through this handle and its clones.
    pub fn calls(&self) -> u64 {
        self.calls.load(Ordering::Relaxed)
    }

    pub fn is_stale(&self) -> bool {
        self.guard.as_ref().is_some_and(|g| g.generation.current() != g.issued)
    }

    fn check(&self, rows: usize, eps: f64) -> Result<()> {
        if !(eps > 0.0 && eps <= 0.5) {
            return Err(Error::InvalidAccuracy(eps));
        }
        if rows != self.dim() {
            return Err(Error::DimensionMismatch(format!(
                "right-hand side of length {rows} for a {}-dimensional solver",
                self.dim()
            )));
        }
        if let Some(g) = &self.guard {
            let current = g.generation.current();
            if current != g.issued {
                return Err(Error::StaleHandle { handle: g.issued, current });
            }
        }
        Ok(())
    }

    pub fn solve(&self, b: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
        self.check(b.len(), eps)?;
        self.calls.fetch_add(1, Ordering::Relaxed);
        self.backend.solve(b, eps)
    }

    /// Solve for every column of `b`.
    pub fn solve_many(&self, b: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
        self.check(b.nrows(), eps)?;
        self.calls.fetch_add(b.ncols() as u64, Ordering::Relaxed);
        self.backend.solve_many(b, eps)
    }
}

struct ExactBackend {
    chol: Cholesky,
}

impl Solve for ExactBackend {
    fn dim(&self) -> usize {
        self.chol.dim()
    }
    fn solve(&self, b: &DVector<f64>, _eps: f64) -> Result<DVector<f64>> {
        Ok(self.chol.solve(b))
    }
    fn solve_many(&self, b: &DMatrix<f64>, _eps: f64) -> Result<DMatrix<f64>> {
        Ok(self.chol.solve_matrix(b))
    }
    fn cost(&self, _eps: f64) -> u64 {
        let d = self.chol.dim() as u64;
        2 * d * d
    }
}

/// Exact solver from a Cholesky factorization of `m`.
pub fn exact_factorize(m: &PdMatrix) -> Result<SolverHandle> {
    let chol = Cholesky::new(m.matrix())?;
    Ok(SolverHandle::new(Arc::new(ExactBackend { chol }), Provenance::Exact, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn exact_solves_and_rejects_singular() {
        let m = PdMatrix::new(dmatrix![2.0, 1.0; 1.0, 2.0]).unwrap();
        let s = exact_factorize(&m).unwrap();
        let x = s.solve(&dvector![3.0, 3.0], 0.5).unwrap();
        assert!((x - dvector![1.0, 1.0]).amax() < 1e-14);
        assert_eq!(s.provenance(), Provenance::Exact);
        let sing = PdMatrix::new(dmatrix![1.0, 1.0; 1.0, 1.0]).unwrap();
        assert!(matches!(exact_factorize(&sing), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn accuracy_and_dimension_checked() {
        let s = exact_factorize(&PdMatrix::identity(2)).unwrap();
        assert!(matches!(s.solve(&dvector![1.0, 1.0], 0.0), Err(Error::InvalidAccuracy(_))));
        assert!(matches!(s.solve(&dvector![1.0, 1.0], 0.6), Err(Error::InvalidAccuracy(_))));
        assert!(matches!(s.solve(&dvector![1.0], 0.1), Err(Error::DimensionMismatch(_))));
    }

    #[test]
    fn generation_guard_invalidates() {
        let g = Generation::new();
        let s = exact_factorize(&PdMatrix::identity(2)).unwrap().guarded(&g);
        assert!(s.solve(&dvector![1.0, 0.0], 0.1).is_ok());
        g.advance();
        assert!(s.is_stale());
        assert!(matches!(s.solve(&dvector![1.0, 0.0], 0.1), Err(Error::StaleHandle { .. })));
    }
}
