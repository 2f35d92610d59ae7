//! Sparse constraint matrices, weight vectors and dense positive definite
//! matrices, with the exact factorization and spectral comparison used as
//! ground truth everywhere else.

mod cholesky;
pub mod io;

pub use cholesky::Cholesky;

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Sparse n x d matrix stored by rows.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintMatrix {
    n: usize,
    d: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
}

impl ConstraintMatrix {
    /// Build from (row, col, value) triplets with distinct positions,
    /// requiring full column rank.
    pub fn from_triplets(n: usize, d: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        let m = Self::from_triplets_unchecked(n, d, triplets)?;
        m.check_rank()?;
        Ok(m)
    }

    /// Like [`from_triplets`](Self::from_triplets) but without the rank check.
    pub fn from_triplets_unchecked(n: usize, d: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        if d == 0 || n < d {
            return Err(Error::DimensionMismatch(format!("constraint matrix needs 0 < d <= n, got n={n} d={d}")));
        }
        let mut sorted: Vec<(usize, usize, f64)> = Vec::with_capacity(triplets.len());
        for &(i, j, v) in triplets {
            if i >= n || j >= d {
                return Err(Error::DimensionMismatch(format!("entry ({i}, {j}) outside {n} x {d}")));
            }
            if !v.is_finite() {
                return Err(Error::InvalidArgument(format!("entry ({i}, {j}) is not finite")));
            }
            sorted.push((i, j, v));
        }
        sorted.sort_by_key(|a| (a.0, a.1));
        let mut row_ptr = vec![0usize; n + 1];
        let mut cols = Vec::with_capacity(sorted.len());
        let mut vals: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                return Err(Error::InvalidArgument(format!("duplicate entry ({i}, {j})")));
            }
            cols.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(ConstraintMatrix { n, d, row_ptr, cols, vals })
    }

    pub fn from_dense(m: &DMatrix<f64>) -> Result<Self> {
        let mut t = Vec::new();
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                if m[(i, j)] != 0.0 {
                    t.push((i, j, m[(i, j)]));
                }
            }
        }
        Self::from_triplets(m.nrows(), m.ncols(), &t)
    }

    /// Build from a row-major slice of rows.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, |r| r.len());
        let mut m = DMatrix::zeros(rows.len(), d);
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::DimensionMismatch("ragged rows".into()));
            }
            for (j, &v) in r.iter().enumerate() {
                m[(i, j)] = v;
            }
        }
        Self::from_dense(&m)
    }

    fn check_rank(&self) -> Result<()> {
        gram_product(self, &WeightVector::ones(self.n)).map(|_| ())
    }

    pub fn nrows(&self) -> usize {
        self.n
    }

    pub fn ncols(&self) -> usize {
        self.d
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    /// Column indices and values of row `i`.
    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    pub fn row_dense(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.d);
        let (c, x) = self.row(i);
        for (&j, &a) in c.iter().zip(x) {
            v[j] = a;
        }
        v
    }

    pub fn row_dot(&self, i: usize, v: &[f64]) -> f64 {
        let (c, x) = self.row(i);
        c.iter().zip(x).map(|(&j, &a)| a * v[j]).sum()
    }

    /// A x for x in R^d.
    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(self.n, |i, _| self.row_dot(i, x.as_slice()))
    }

    /// A^T y for y in R^n.
    pub fn apply_t(&self, y: &DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(self.d);
        for i in 0..self.n {
            let yi = y[i];
            if yi == 0.0 {
                continue;
            }
            let (c, x) = self.row(i);
            for (&j, &a) in c.iter().zip(x) {
                out[j] += a * yi;
            }
        }
        out
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.d);
        for i in 0..self.n {
            let (c, x) = self.row(i);
            for (&j, &a) in c.iter().zip(x) {
                m[(i, j)] = a;
            }
        }
        m
    }

    /// A copy with extra rows appended. Appending rows cannot lower the
    /// column rank, so no check is repeated.
    pub fn with_rows_appended(&self, rows: &[Vec<(usize, f64)>]) -> Result<Self> {
        let mut out = self.clone();
        for r in rows {
            let mut r = r.clone();
            r.sort_by_key(|e| e.0);
            for &(j, v) in &r {
                if j >= self.d || !v.is_finite() {
                    return Err(Error::InvalidArgument(format!("bad appended entry ({j}, {v})")));
                }
                out.cols.push(j);
                out.vals.push(v);
            }
            out.n += 1;
            out.row_ptr.push(out.cols.len());
        }
        Ok(out)
    }

    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| {
            let (c, x) = self.row(i);
            c.iter().zip(x).map(move |(&j, &a)| (i, j, a))
        })
    }
}

/// Nonnegative, finite weights, one per row of a constraint matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::NonPositiveWeights(i));
        }
        Ok(WeightVector(w))
    }

    pub fn ones(n: usize) -> Self {
        WeightVector(vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&i| self.0[i] > 0.0).collect()
    }
}

impl std::ops::Index<usize> for WeightVector {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Dense symmetric matrix asserted to be positive (semi)definite.
#[derive(Debug, Clone, PartialEq)]
pub struct PdMatrix(DMatrix<f64>);

impl PdMatrix {
    /// Symmetrizes `m`; rejects non-square input and asymmetry beyond
    /// rounding level.
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::DimensionMismatch(format!(
                "expected a square matrix, got {} x {}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("matrix has non-finite entries".into()));
        }
        let scale = m.amax().max(1.0);
        let asym = (&m - m.transpose()).amax();
        if asym > 1e-8 * scale {
            return Err(Error::NotPositiveDefinite(format!("asymmetry {asym:e}")));
        }
        Ok(PdMatrix((&m + m.transpose()) * 0.5))
    }

    pub fn identity(d: usize) -> Self {
        PdMatrix(DMatrix::identity(d, d))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn apply(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.0 * x
    }

    /// x^T M x.
    pub fn quad(&self, x: &DVector<f64>) -> f64 {
        x.dot(&(&self.0 * x))
    }
}

/// A^T diag(w) A, accumulated over the support of w. Fails with
/// `RankDeficient` when the result does not factor.
pub fn gram_product(a: &ConstraintMatrix, w: &WeightVector) -> Result<PdMatrix> {
    if w.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!("{} weights for {} rows", w.len(), a.nrows())));
    }
    let d = a.ncols();
    let mut g = DMatrix::<f64>::zeros(d, d);
    for i in 0..a.nrows() {
        let wi = w[i];
        if wi == 0.0 {
            continue;
        }
        let (c, x) = a.row(i);
        for (p, &j) in c.iter().enumerate() {
            let s = wi * x[p];
            for (q, &k) in c.iter().enumerate().skip(p) {
                g[(j, k)] += s * x[q];
            }
        }
    }
    for j in 0..d {
        for k in 0..j {
            let v = g[(j, k)] + g[(k, j)];
            g[(j, k)] = v;
            g[(k, j)] = v;
        }
    }
    Cholesky::new(&g)?;
    Ok(PdMatrix(g))
}

/// Generalized eigenvalue range of M relative to N, the extreme eigenvalues
/// of L^{-1} M L^{-T} with N = L L^T. Only N must be positive definite.
pub fn generalized_eigen_range(m: &DMatrix<f64>, n: &DMatrix<f64>) -> Result<(f64, f64)> {
    if m.shape() != n.shape() || m.nrows() != m.ncols() {
        return Err(Error::DimensionMismatch("generalized eigenproblem shapes".into()));
    }
    let ch = Cholesky::new(n)?;
    let x = ch.whiten(m);
    let sym = (&x + x.transpose()) * 0.5;
    let ev = SymmetricEigen::new(sym).eigenvalues;
    let lo = ev.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ev.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok((lo, hi))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralReport {
    pub close: bool,
    pub lambda_min: f64,
    pub lambda_max: f64,
}

impl SpectralReport {
    /// Smallest eps for which the two matrices are eps-close.
    pub fn band(&self) -> f64 {
        if self.lambda_min <= 0.0 {
            return f64::INFINITY;
        }
        self.lambda_max.ln().max(-self.lambda_min.ln())
    }
}

/// Whether e^{-eps} N <= M <= e^{eps} N.
pub fn spectral_close(m: &PdMatrix, n: &PdMatrix, eps: f64) -> Result<SpectralReport> {
    let (lo, hi) = generalized_eigen_range(m.matrix(), n.matrix())?;
    let close = lo >= (-eps).exp() && hi <= eps.exp();
    Ok(SpectralReport { close, lambda_min: lo, lambda_max: hi })
}

/// Exact leverage scores sigma_i of diag(w)^{1/2} A, computed densely.
pub fn exact_leverage_scores(a: &ConstraintMatrix, w: &WeightVector) -> Result<Vec<f64>> {
    let g = gram_product(a, w)?;
    let ch = Cholesky::new(g.matrix())?;
    let mut out = vec![0.0; a.nrows()];
    for (i, o) in out.iter_mut().enumerate() {
        if w[i] == 0.0 {
            continue;
        }
        let z = ch.forward(&a.row_dense(i));
        *o = w[i] * z.norm_squared();
    }
    Ok(out)
}
