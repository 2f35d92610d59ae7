//! Interior point applications of the maintained solvers.

mod center;
mod dual;
pub mod flow;
mod io;
mod ipm;
mod newton;

pub use center::{analytic_center, rounding_ellipsoid, CenterConfig, EllipsoidRounding, RoundingWeights};
pub use dual::{l1_regress, linf_regress, solve_lp_dual, DualSolution};
pub use io::{parse_lp, read_lp, write_lp};
pub use ipm::{equality_residual, solve_lp, IpmConfig, LpSolution, LpStats};

use crate::error::{Error, Result};
use crate::matrix::ConstraintMatrix;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// min c^T x subject to A x = b and l <= x <= u, for A of size d x n.
///
/// A is stored transposed (n x d, one row per variable) so that the
/// normal matrix A D A^T is a weighted Gram matrix of its rows.
#[derive(Debug, Clone)]
pub struct LpProblem {
    pub at: Arc<ConstraintMatrix>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub l: DVector<f64>,
    pub u: DVector<f64>,
    pub x0: DVector<f64>,
}

impl LpProblem {
    /// Build from the entries (row, col, value) of the d x n matrix A.
    pub fn new(
        d: usize,
        n: usize,
        a_entries: &[(usize, usize, f64)],
        b: DVector<f64>,
        c: DVector<f64>,
        l: DVector<f64>,
        u: DVector<f64>,
        x0: DVector<f64>,
    ) -> Result<Self> {
        let t: Vec<(usize, usize, f64)> = a_entries.iter().map(|&(i, j, v)| (j, i, v)).collect();
        let at = ConstraintMatrix::from_triplets(n, d, &t)?;
        Self::from_transposed(Arc::new(at), b, c, l, u, x0)
    }

    pub fn from_dense(
        a: &DMatrix<f64>,
        b: DVector<f64>,
        c: DVector<f64>,
        l: DVector<f64>,
        u: DVector<f64>,
        x0: DVector<f64>,
    ) -> Result<Self> {
        let at = ConstraintMatrix::from_dense(&a.transpose())?;
        Self::from_transposed(Arc::new(at), b, c, l, u, x0)
    }

    pub fn from_transposed(
        at: Arc<ConstraintMatrix>,
        b: DVector<f64>,
        c: DVector<f64>,
        l: DVector<f64>,
        u: DVector<f64>,
        x0: DVector<f64>,
    ) -> Result<Self> {
        let (n, d) = (at.nrows(), at.ncols());
        if b.len() != d || c.len() != n || l.len() != n || u.len() != n || x0.len() != n {
            return Err(Error::DimensionMismatch(format!("LP with {d} equalities and {n} variables")));
        }
        if let Some(i) = (0..n).find(|&i| !(l[i] < u[i])) {
            return Err(Error::InvalidArgument(format!("empty box for variable {i}")));
        }
        Ok(LpProblem { at, b, c, l, u, x0 })
    }

    /// Number of variables.
    pub fn n(&self) -> usize {
        self.at.nrows()
    }

    /// Number of equality constraints.
    pub fn d(&self) -> usize {
        self.at.ncols()
    }

    /// A x.
    pub fn apply_a(&self, x: &DVector<f64>) -> DVector<f64> {
        self.at.apply_t(x)
    }

    /// Checks that x0 is strictly inside the box and satisfies A x0 = b.
    pub fn check_start(&self) -> Result<()> {
        let n = self.n();
        if let Some(i) = (0..n).find(|&i| !(self.x0[i] > self.l[i] && self.x0[i] < self.u[i])) {
            return Err(Error::Infeasible(format!("x0[{i}] is not strictly inside its bounds")));
        }
        let r = self.apply_a(&self.x0) - &self.b;
        let scale =
            self.b.amax().max(self.at.entries().fold(0.0f64, |m, e| m.max(e.2.abs())) * self.x0.amax()).max(1.0);
        if r.amax() > 1e-9 * scale {
            return Err(Error::Infeasible(format!("A x0 differs from b by {:.3e}", r.amax())));
        }
        Ok(())
    }

    /// The width U: the largest of ||(u-l)/(u-x0)||_inf, ||(u-l)/(x0-l)||_inf,
    /// ||u-l||_inf and ||c||_inf.
    pub fn width(&self) -> f64 {
        let mut w = self.c.amax();
        for i in 0..self.n() {
            let r = self.u[i] - self.l[i];
            w = w.max(r).max(r / (self.u[i] - self.x0[i])).max(r / (self.x0[i] - self.l[i]));
        }
        w
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        self.c.dot(x)
    }
}
