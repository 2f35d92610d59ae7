use super::ipm::{solve_lp, IpmConfig, LpStats};
use super::LpProblem;
use crate::error::{Error, Result};
use crate::matrix::ConstraintMatrix;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct DualSolution {
    pub y: DVector<f64>,
    /// b^T y + ||A y + c||_1.
    pub value: f64,
    /// value minus the lower bound certified by the primal point.
    pub gap: f64,
    pub stats: Option<LpStats>,
}

/// b^T y + ||A y + c||_1.
pub fn dual_objective(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>, y: &DVector<f64>) -> f64 {
    b.dot(y) + (a * y + c).iter().map(|v| v.abs()).sum::<f64>()
}

/// Indices of a maximal linearly independent set of columns.
fn column_basis(a: &DMatrix<f64>) -> Vec<usize> {
    let scale = a.amax().max(f64::MIN_POSITIVE);
    let mut q: Vec<DVector<f64>> = Vec::new();
    let mut keep = Vec::new();
    for j in 0..a.ncols() {
        let mut v = a.column(j).into_owned();
        for _ in 0..2 {
            for u in &q {
                let p = u.dot(&v);
                v -= u * p;
            }
        }
        let nv = v.norm();
        if nv > 1e-10 * scale * (a.nrows() as f64).sqrt() {
            q.push(v / nv);
            keep.push(j);
        }
    }
    keep
}

/// Minimise b^T y + ||A y + c||_1 given x0 with A^T x0 = b and |x0| < 1.
///
/// This is the dual of min c^T x subject to A^T x = b, -1 <= x <= 1, and y
/// is read off the equality multipliers.
pub fn solve_lp_dual(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    x0: &DVector<f64>,
    eps: f64,
    cfg: &IpmConfig,
) -> Result<DualSolution> {
    let (n, d) = (a.nrows(), a.ncols());
    if b.len() != d || c.len() != n || x0.len() != n {
        return Err(Error::DimensionMismatch("dual LP inputs".into()));
    }
    if x0.iter().any(|v| !(v.abs() < 1.0)) {
        return Err(Error::Infeasible("x0 must lie strictly inside [-1, 1]".into()));
    }
    let resid = a.tr_mul(x0) - b;
    if resid.amax() > 1e-9 * b.amax().max(1.0) * (n as f64) {
        return Err(Error::Infeasible(format!("A^T x0 differs from b by {:.3e}", resid.amax())));
    }
    let basis = column_basis(a);
    if basis.is_empty() {
        let y = DVector::zeros(d);
        let value = dual_objective(a, b, c, &y);
        return Ok(DualSolution { value, gap: 0.0, y, stats: None });
    }
    let ab = a.select_columns(&basis);
    let bb = DVector::from_iterator(basis.len(), basis.iter().map(|&j| b[j]));
    let at = Arc::new(ConstraintMatrix::from_dense(&ab)?);
    let ones = DVector::from_element(n, 1.0);
    let p = LpProblem::from_transposed(at, bb, c.clone(), -&ones, ones, x0.clone())?;
    let mut target = eps;
    let mut last = None;
    for _ in 0..4 {
        let sol = solve_lp(&p, target, cfg)?;
        let mut y = DVector::zeros(d);
        for (k, &j) in basis.iter().enumerate() {
            y[j] = -sol.multipliers[k];
        }
        let value = dual_objective(a, b, c, &y);
        let gap = value + p.objective(&sol.y);
        let ok = gap <= eps;
        last = Some(DualSolution { y, value, gap, stats: Some(sol.stats) });
        if ok {
            break;
        }
        target /= 10.0;
    }
    Ok(last.expect("at least one solve"))
}

/// x with ||A x - c||_1 within eps ||c||_1 of the minimum.
pub fn l1_regress(a: &DMatrix<f64>, c: &DVector<f64>, eps: f64, cfg: &IpmConfig) -> Result<DVector<f64>> {
    let l1 = c.iter().map(|v| v.abs()).sum::<f64>();
    if l1 == 0.0 {
        return Err(Error::InvalidArgument("c must be nonzero".into()));
    }
    let (n, d) = (a.nrows(), a.ncols());
    let sol = solve_lp_dual(a, &DVector::zeros(d), &-c, &DVector::zeros(n), eps * l1, cfg)?;
    Ok(sol.y)
}

/// x with ||A x - c||_inf within eps ||c||_inf of the minimum, via the
/// stacked l1 problem over (x, t)
///   (1/2 - 2n) t + || [A -1; A 1] (x, t) - (c, c) ||_1.
pub fn linf_regress(a: &DMatrix<f64>, c: &DVector<f64>, eps: f64, cfg: &IpmConfig) -> Result<DVector<f64>> {
    let linf = c.amax();
    if linf == 0.0 {
        return Err(Error::InvalidArgument("c must be nonzero".into()));
    }
    let (n, d) = (a.nrows(), a.ncols());
    let nf = n as f64;
    let mut stacked = DMatrix::zeros(2 * n, d + 1);
    stacked.view_mut((0, 0), (n, d)).copy_from(a);
    stacked.view_mut((n, 0), (n, d)).copy_from(a);
    for i in 0..n {
        stacked[(i, d)] = -1.0;
        stacked[(n + i, d)] = 1.0;
    }
    let mut b = DVector::zeros(d + 1);
    b[d] = 0.5 - 2.0 * nf;
    let cc = DVector::from_fn(2 * n, |i, _| -c[i % n]);
    let scale = (2.0 * nf - 0.5) / (2.0 * nf);
    let x0 = DVector::from_fn(2 * n, |i, _| if i < n { scale } else { -scale });
    let sol = solve_lp_dual(&stacked, &b, &cc, &x0, eps * linf / 2.0, cfg)?;
    Ok(sol.y.rows(0, d).into_owned())
}
