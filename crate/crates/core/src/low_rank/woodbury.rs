use crate::error::{Error, Result};
use crate::solver::LinearOp;
use nalgebra::{DMatrix, DVector};

/// Row and column scalings r, c with every row and column of diag(r) M diag(c)
/// of max norm close to 1. Zero rows and columns keep scale 1.
fn equilibrate(m: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = m.nrows();
    let mut r = DVector::from_element(n, 1.0);
    let mut c = DVector::from_element(n, 1.0);
    for _ in 0..8 {
        for i in 0..n {
            let mx = (0..n).map(|j| (r[i] * m[(i, j)] * c[j]).abs()).fold(0.0, f64::max);
            if mx > 0.0 {
                r[i] /= mx.sqrt();
            }
        }
        for j in 0..n {
            let mx = (0..n).map(|i| (r[i] * m[(i, j)] * c[j]).abs()).fold(0.0, f64::max);
            if mx > 0.0 {
                c[j] /= mx.sqrt();
            }
        }
    }
    (r, c)
}

/// Solve a small square system by partial-pivot LU after equilibration,
/// reporting near-singular pivots as a singular capacitance.
pub(crate) fn lu_solve(m: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(DMatrix::zeros(0, b.ncols()));
    }
    let (r, c) = equilibrate(m);
    let scaled = DMatrix::from_fn(n, n, |i, j| r[i] * m[(i, j)] * c[j]);
    let lu = scaled.clone().lu();
    let u = lu.u();
    let scale = scaled.amax().max(f64::MIN_POSITIVE);
    let min_pivot = (0..n).map(|i| u[(i, i)].abs()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-13 * scale) {
        return Err(Error::SingularCapacitance);
    }
    let mut rb = b.clone();
    for i in 0..n {
        rb.row_mut(i).scale_mut(r[i]);
    }
    let mut x = lu.solve(&rb).ok_or(Error::SingularCapacitance)?;
    for i in 0..n {
        x.row_mut(i).scale_mut(c[i]);
    }
    Ok(x)
}

pub(crate) fn lu_inverse(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    lu_solve(m, &DMatrix::identity(m.nrows(), m.nrows()))
}

/// (A + U C V)^{-1} b using an operator for A^{-1}.
pub fn woodbury_inverse_apply(
    a_inv: &dyn LinearOp,
    u: &DMatrix<f64>,
    c: &DMatrix<f64>,
    v: &DMatrix<f64>,
    b: &DVector<f64>,
) -> Result<DVector<f64>> {
    let d = a_inv.dim();
    let m = c.nrows();
    if u.shape() != (d, m) || c.ncols() != m || v.shape() != (m, d) || b.len() != d {
        return Err(Error::DimensionMismatch("Woodbury factor shapes".into()));
    }
    let ainv_b = a_inv.apply(b);
    let ainv_u = a_inv.apply_many(u);
    let cap = lu_inverse(c)? + v * &ainv_u;
    let rhs = DMatrix::from_column_slice(m, 1, (v * &ainv_b).as_slice());
    let t = lu_solve(&cap, &rhs)?;
    Ok(ainv_b - &ainv_u * t.column(0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solver::DenseOp;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn rank_one_example() {
        let a = DenseOp(DMatrix::identity(2, 2));
        let x =
            woodbury_inverse_apply(&a, &dmatrix![1.0; 0.0], &dmatrix![1.0], &dmatrix![1.0, 0.0], &dvector![2.0, 2.0])
                .unwrap();
        assert!((x - dvector![1.0, 2.0]).amax() < 1e-15);
    }

    #[test]
    fn singular_capacitance_detected() {
        let a = DenseOp(DMatrix::identity(2, 2));
        let r =
            woodbury_inverse_apply(&a, &dmatrix![1.0; 0.0], &dmatrix![-1.0], &dmatrix![1.0, 0.0], &dvector![1.0, 1.0]);
        assert_eq!(r, Err(Error::SingularCapacitance));
    }
}
