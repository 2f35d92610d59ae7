use super::telemetry::Telemetry;
use super::tracker::{ProductTracker, Rows, SparseVec};
use super::woodbury::lu_inverse;
use crate::error::{Error, Result};
use crate::matrix::{gram_product, Cholesky, ConstraintMatrix, WeightVector};
use crate::solver::{Generation, LinearOp, Provenance, Solve, SolverHandle};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Snapshot of B0^{-1} - C_S^T W C_S, the inverse of
/// A^T (D0 + Delta) A with Delta supported on S.
#[derive(Debug, Clone)]
pub struct ExplicitInverse {
    base_inv: Arc<DMatrix<f64>>,
    /// Rows c_i = B0^{-1} a_i for i in supp(Delta), as columns.
    c_s: DMatrix<f64>,
    /// Delta V Delta.
    w: DMatrix<f64>,
}

impl ExplicitInverse {
    pub fn dim(&self) -> usize {
        self.base_inv.nrows()
    }

    pub fn support_size(&self) -> usize {
        self.c_s.ncols()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let m = self.base_inv.as_ref() - &self.c_s * &self.w * self.c_s.transpose();
        (&m + m.transpose()) * 0.5
    }
}

impl LinearOp for ExplicitInverse {
    fn dim(&self) -> usize {
        self.base_inv.nrows()
    }
    fn apply(&self, b: &DVector<f64>) -> DVector<f64> {
        let mut out = self.base_inv.as_ref() * b;
        if self.c_s.ncols() > 0 {
            let t = self.c_s.tr_mul(b);
            out -= &self.c_s * (&self.w * t);
        }
        out
    }
    fn apply_many(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = self.base_inv.as_ref() * b;
        if self.c_s.ncols() > 0 {
            let t = self.c_s.tr_mul(b);
            out -= &self.c_s * (&self.w * t);
        }
        out
    }
    fn cost(&self) -> u64 {
        let (d, u) = (self.dim() as u64, self.c_s.ncols() as u64);
        d * d + 2 * d * u + u * u
    }
}

/// Applies an explicit inverse exactly, ignoring the requested accuracy.
pub(crate) struct OperatorSolve(pub Arc<dyn LinearOp>);

impl Solve for OperatorSolve {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn solve(&self, b: &DVector<f64>, _eps: f64) -> Result<DVector<f64>> {
        Ok(self.0.apply(b))
    }
    fn solve_many(&self, b: &DMatrix<f64>, _eps: f64) -> Result<DMatrix<f64>> {
        Ok(self.0.apply_many(b))
    }
    fn cost(&self, _eps: f64) -> u64 {
        self.0.cost()
    }
}

/// Shared machinery: base inverse, C = A B0^{-1}, the tracked products
/// c_i . a_j and the capacitance inverse V.
#[derive(Debug, Clone)]
pub(crate) struct ExplicitCore {
    pub a: Arc<ConstraintMatrix>,
    pub base_inv: Arc<DMatrix<f64>>,
    pub c: Arc<DMatrix<f64>>,
    pub delta: SparseVec,
    /// Left C, right A; rows supp(Delta), columns supp(Delta) plus extras.
    pub tracker: ProductTracker,
    pub snapshot: Arc<ExplicitInverse>,
    /// Delta V Delta on supp(Delta), kept for the split maintainer.
    pub dvd: DMatrix<f64>,
    pub capacitance_work: u64,
}

impl ExplicitCore {
    pub fn new(a: Arc<ConstraintMatrix>, base: &WeightVector) -> Result<Self> {
        let b = gram_product(&a, base)?;
        let base_inv = Arc::new(Cholesky::new(b.matrix())?.inverse());
        let c = Arc::new(compute_c(&a, &base_inv, 0, None));
        let tracker = ProductTracker::new(Rows::Dense(c.clone()), Rows::Sparse(a.clone()), usize::MAX)?;
        let snapshot = Arc::new(ExplicitInverse {
            base_inv: base_inv.clone(),
            c_s: DMatrix::zeros(a.ncols(), 0),
            w: DMatrix::zeros(0, 0),
        });
        Ok(ExplicitCore {
            a,
            base_inv,
            c,
            delta: SparseVec::new(),
            tracker,
            snapshot,
            dvd: DMatrix::zeros(0, 0),
            capacitance_work: 0,
        })
    }

    /// Append rows to A and C.
    pub fn extend(&mut self, a: Arc<ConstraintMatrix>) {
        let old = self.c.nrows();
        self.c = Arc::new(compute_c(&a, &self.base_inv, old, Some(&self.c)));
        self.a = a;
        self.tracker.set_sources(Rows::Dense(self.c.clone()), Rows::Sparse(self.a.clone()));
    }

    /// Move to a new Delta; `extra_cols` are further columns the caller
    /// needs products for.
    pub fn set_delta(&mut self, delta: SparseVec, extra_cols: &SparseVec) -> Result<()> {
        let mut y = delta.clone();
        for (&j, &v) in extra_cols {
            y.insert(j, v);
        }
        self.tracker.update(&delta, &y)?;
        let ids: Vec<usize> = delta.keys().copied().collect();
        let u = ids.len();
        let dv = DVector::from_iterator(u, ids.iter().map(|i| delta[i]));
        let g = self.tracker.core_block(&ids, &ids);
        let mut cap = DMatrix::from_diagonal(&dv);
        for a in 0..u {
            for b in 0..u {
                cap[(a, b)] += dv[a] * g[(a, b)] * dv[b];
            }
        }
        let v = lu_inverse(&cap)?;
        self.capacitance_work += (u * u * u) as u64;
        let mut dvd = v;
        for a in 0..u {
            for b in 0..u {
                dvd[(a, b)] *= dv[a] * dv[b];
            }
        }
        let dvd = (&dvd + dvd.transpose()) * 0.5;
        let d = self.a.ncols();
        let mut c_s = DMatrix::zeros(d, u);
        for (k, &i) in ids.iter().enumerate() {
            for j in 0..d {
                c_s[(j, k)] = self.c[(i, j)];
            }
        }
        self.snapshot = Arc::new(ExplicitInverse { base_inv: self.base_inv.clone(), c_s, w: dvd.clone() });
        self.dvd = dvd;
        self.delta = delta;
        Ok(())
    }
}

fn compute_c(a: &ConstraintMatrix, base_inv: &DMatrix<f64>, from: usize, prev: Option<&DMatrix<f64>>) -> DMatrix<f64> {
    let (n, d) = (a.nrows(), a.ncols());
    let mut c = DMatrix::zeros(n, d);
    if let Some(p) = prev {
        c.view_mut((0, 0), (from, d)).copy_from(&p.view((0, 0), (from, d)));
    }
    for i in from..n {
        let (cols, vals) = a.row(i);
        for k in 0..d {
            let mut s = 0.0;
            for (&j, &v) in cols.iter().zip(vals) {
                s += base_inv[(k, j)] * v;
            }
            c[(i, k)] = s;
        }
    }
    c
}

/// Maintains (A^T D^(k) A)^{-1} explicitly as D^(k) changes in few
/// coordinates from a fixed D^(0).
#[derive(Debug)]
pub struct ExplicitInverseState {
    core: ExplicitCore,
    d0: Vec<f64>,
    budget: usize,
    used: usize,
    round: usize,
    generation: Generation,
    telemetry: Telemetry,
}

impl ExplicitInverseState {
    /// Start from B0 = A^T D0 A. `budget` bounds the cumulative number of
    /// coordinate changes.
    pub fn new(a: Arc<ConstraintMatrix>, d0: &WeightVector, budget: usize) -> Result<Self> {
        if d0.len() != a.nrows() {
            return Err(Error::DimensionMismatch("initial weights".into()));
        }
        let core = ExplicitCore::new(a, d0)?;
        Ok(ExplicitInverseState {
            core,
            d0: d0.as_slice().to_vec(),
            budget,
            used: 0,
            round: 0,
            generation: Generation::new(),
            telemetry: Telemetry::default(),
        })
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn telemetry(&self) -> &Telemetry {
        &self.telemetry
    }

    /// Current inverse as an operator.
    pub fn inverse(&self) -> Arc<ExplicitInverse> {
        self.core.snapshot.clone()
    }

    /// Move to weights `d_k` and return an exact handle for A^T D^(k) A.
    /// Handles from earlier rounds become stale.
    pub fn round(&mut self, d_k: &WeightVector) -> Result<SolverHandle> {
        let n = self.d0.len();
        if d_k.len() != n {
            return Err(Error::DimensionMismatch(format!("{} weights for {n} rows", d_k.len())));
        }
        let mut delta = SparseVec::new();
        for i in 0..n {
            let dl = d_k[i] - self.d0[i];
            if dl != 0.0 {
                delta.insert(i, dl);
            }
        }
        let changes = delta.iter().filter(|(i, v)| self.core.delta.get(i) != Some(v)).count()
            + self.core.delta.keys().filter(|i| !delta.contains_key(i)).count();
        if self.used + changes > self.budget {
            return Err(Error::BudgetExceeded { used: self.used + changes, budget: self.budget });
        }
        let before = self.core.tracker.work() + self.core.capacitance_work;
        self.core.set_delta(delta, &SparseVec::new())?;
        self.used += changes;
        self.round += 1;
        let after = self.core.tracker.work() + self.core.capacitance_work;
        self.telemetry.record(self.round, "changed", changes as u64);
        self.telemetry.record(self.round, "support", self.core.delta.len() as u64);
        self.telemetry.record(self.round, "work", after - before);
        self.generation.advance();
        let op: Arc<dyn LinearOp> = self.core.snapshot.clone();
        Ok(SolverHandle::new(Arc::new(OperatorSolve(op)), Provenance::Maintained, true).guarded(&self.generation))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn instance() -> (Arc<ConstraintMatrix>, WeightVector) {
        let mut g = crate::rng::Gaussian::new(crate::rng::rng_from(1, &[]));
        let rows: Vec<Vec<f64>> = (0..12).map(|_| (0..3).map(|_| g.sample()).collect()).collect();
        (Arc::new(ConstraintMatrix::from_rows(&rows).unwrap()), WeightVector::ones(12))
    }

    #[test]
    fn matches_dense_inverse() {
        let (a, d0) = instance();
        let mut st = ExplicitInverseState::new(a.clone(), &d0, 100).unwrap();
        let mut w = d0.as_slice().to_vec();
        for k in 0..5 {
            w[k * 2] *= 1.5 + k as f64;
            let wk = WeightVector::new(w.clone()).unwrap();
            let h = st.round(&wk).unwrap();
            let exact = gram_product(&a, &wk).unwrap().matrix().clone().try_inverse().unwrap();
            let got = st.inverse().to_dense();
            assert!((got - &exact).amax() < 1e-10 * exact.amax());
            let b = DVector::from_element(3, 1.0);
            assert!((h.solve(&b, 0.1).unwrap() - &exact * &b).amax() < 1e-10);
        }
    }

    #[test]
    fn budget_and_staleness() {
        let (a, d0) = instance();
        let mut st = ExplicitInverseState::new(a, &d0, 1).unwrap();
        let mut w = d0.as_slice().to_vec();
        w[0] = 2.0;
        let h = st.round(&WeightVector::new(w.clone()).unwrap()).unwrap();
        w[1] = 2.0;
        assert!(matches!(st.round(&WeightVector::new(w.clone()).unwrap()), Err(Error::BudgetExceeded { .. })));
        assert!(!h.is_stale());
        w[1] = 1.0;
        st.round(&WeightVector::new(w).unwrap()).unwrap();
        assert!(h.is_stale());
    }

    #[test]
    fn singular_update_reported() {
        let (a, d0) = instance();
        let mut st = ExplicitInverseState::new(a, &d0, 100).unwrap();
        let w = WeightVector::new(vec![0.0; 12]).unwrap();
        assert!(matches!(st.round(&w), Err(Error::SingularCapacitance)));
    }
}
