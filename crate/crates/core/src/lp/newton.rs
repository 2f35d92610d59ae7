use crate::error::Result;
use crate::maintenance::{MaintenanceSession, StabilityConfig};
use crate::matrix::{ConstraintMatrix, WeightVector};
use crate::noisy::NoisyHandle;
use crate::rng::derive;
use crate::solver::SolverHandle;
use nalgebra::DVector;
use std::sync::Arc;

/// Solves with A^T diag(w) A for a slowly moving w, through a maintenance
/// session and optionally the noisy wrapper.
pub(crate) struct NormalSolver {
    a: Arc<ConstraintMatrix>,
    session: MaintenanceSession,
    handle: SolverHandle,
    weights: Vec<f64>,
    noisy: bool,
    eps: f64,
    seed: u64,
    solves: u64,
}

impl NormalSolver {
    pub fn new(a: Arc<ConstraintMatrix>, w: Vec<f64>, cfg: StabilityConfig, noisy: bool, eps: f64) -> Result<Self> {
        let seed = cfg.seed;
        let (session, handle) = MaintenanceSession::new(a.clone(), &WeightVector::new(w.clone())?, cfg)?;
        Ok(NormalSolver { a, session, handle, weights: w, noisy, eps, seed, solves: 0 })
    }

    /// Move to new weights. On error (typically a stability violation)
    /// nothing changes.
    pub fn advance(&mut self, w: Vec<f64>) -> Result<()> {
        self.handle = self.session.round(&WeightVector::new(w.clone())?)?;
        self.weights = w;
        Ok(())
    }

    pub fn solve(&mut self, rhs: &DVector<f64>) -> Result<DVector<f64>> {
        self.solves += 1;
        if !self.noisy {
            return self.handle.solve(rhs, self.eps);
        }
        let scale = self.weights.iter().map(|w| w.sqrt()).collect();
        let seed = derive(self.seed, &[0x4015e, self.solves]);
        NoisyHandle::new(self.handle.clone(), self.a.clone(), Some(scale), seed)?.solve(rhs, self.eps)
    }

    pub fn session(&self) -> &MaintenanceSession {
        &self.session
    }
}
