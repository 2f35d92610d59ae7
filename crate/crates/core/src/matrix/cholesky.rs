use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Lower-triangular Cholesky factor M = L L^T.
///
/// A pivot at or below `1e-12 * M_jj` is reported as rank deficiency, so the
/// test is unaffected by diagonal scaling.
#[derive(Debug, Clone)]
pub struct Cholesky {
    l: DMatrix<f64>,
}

impl Cholesky {
    pub fn new(m: &DMatrix<f64>) -> Result<Self> {
        let d = m.nrows();
        if m.ncols() != d {
            return Err(Error::DimensionMismatch("Cholesky of a non-square matrix".into()));
        }
        let max_diag = (0..d).map(|i| m[(i, i)]).fold(0.0f64, f64::max);
        let mut l = DMatrix::<f64>::zeros(d, d);
        for j in 0..d {
            let mut s = m[(j, j)];
            for k in 0..j {
                s -= l[(j, k)] * l[(j, k)];
            }
            if !(s > 1e-12 * m[(j, j)]) || !(m[(j, j)] > 1e-300 * max_diag) {
                return Err(Error::RankDeficient { column: j, pivot: s });
            }
            let ljj = s.sqrt();
            l[(j, j)] = ljj;
            for i in (j + 1)..d {
                let mut s = m[(i, j)];
                for k in 0..j {
                    s -= l[(i, k)] * l[(j, k)];
                }
                l[(i, j)] = s / ljj;
            }
        }
        Ok(Cholesky { l })
    }

    pub fn dim(&self) -> usize {
        self.l.nrows()
    }

    pub fn factor(&self) -> &DMatrix<f64> {
        &self.l
    }

    /// L^{-1} b.
    pub fn forward(&self, b: &DVector<f64>) -> DVector<f64> {
        let d = self.dim();
        let mut x = b.clone();
        for i in 0..d {
            let mut s = x[i];
            for k in 0..i {
                s -= self.l[(i, k)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// L^{-T} b.
    pub fn backward(&self, b: &DVector<f64>) -> DVector<f64> {
        let d = self.dim();
        let mut x = b.clone();
        for i in (0..d).rev() {
            let mut s = x[i];
            for k in (i + 1)..d {
                s -= self.l[(k, i)] * x[k];
            }
            x[i] = s / self.l[(i, i)];
        }
        x
    }

    /// M^{-1} b.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        self.backward(&self.forward(b))
    }

    pub fn solve_matrix(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = b.clone();
        for j in 0..b.ncols() {
            let x = self.solve(&b.column(j).into_owned());
            out.set_column(j, &x);
        }
        out
    }

    /// M^{-1}.
    pub fn inverse(&self) -> DMatrix<f64> {
        let inv = self.solve_matrix(&DMatrix::identity(self.dim(), self.dim()));
        (&inv + inv.transpose()) * 0.5
    }

    /// L^{-1} X L^{-T}.
    pub fn whiten(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let d = self.dim();
        let mut y = DMatrix::zeros(d, d);
        for j in 0..d {
            y.set_column(j, &self.forward(&x.column(j).into_owned()));
        }
        let yt = y.transpose();
        let mut z = DMatrix::zeros(d, d);
        for j in 0..d {
            z.set_column(j, &self.forward(&yt.column(j).into_owned()));
        }
        z
    }
}
