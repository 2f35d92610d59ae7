use crate::error::{Error, Result};
use crate::matrix::ConstraintMatrix;
use nalgebra::{DMatrix, DVector};
use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

/// Sparse vector as index -> nonzero value.
pub type SparseVec = BTreeMap<usize, f64>;

/// Row access to either a sparse constraint matrix or a dense matrix.
#[derive(Debug, Clone)]
pub enum Rows {
    Sparse(Arc<ConstraintMatrix>),
    Dense(Arc<DMatrix<f64>>),
}

impl Rows {
    pub fn dim(&self) -> usize {
        match self {
            Rows::Sparse(a) => a.ncols(),
            Rows::Dense(m) => m.ncols(),
        }
    }

    pub fn nrows(&self) -> usize {
        match self {
            Rows::Sparse(a) => a.nrows(),
            Rows::Dense(m) => m.nrows(),
        }
    }

    pub fn fill_row(&self, i: usize, out: &mut [f64]) {
        match self {
            Rows::Sparse(a) => {
                out.iter_mut().for_each(|v| *v = 0.0);
                let (c, x) = a.row(i);
                for (&j, &v) in c.iter().zip(x) {
                    out[j] = v;
                }
            }
            Rows::Dense(m) => {
                for (j, o) in out.iter_mut().enumerate() {
                    *o = m[(i, j)];
                }
            }
        }
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        self.fill_row(i, v.as_mut_slice());
        v
    }

    /// d x k matrix whose columns are the listed rows.
    fn gather(&self, ids: &[usize]) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, ids.len());
        let mut buf = vec![0.0; d];
        for (k, &i) in ids.iter().enumerate() {
            self.fill_row(i, &mut buf);
            m.column_mut(k).copy_from_slice(&buf);
        }
        m
    }
}

const PANEL: usize = 32;

/// Maintains X L R^T Y for sparse diagonal X and Y as they change.
///
/// The unscaled inner products l_i . r_j are stored for every row ever in
/// the support of x and every column ever in the support of y, so a round
/// only computes products for coordinates that enter a support. New
/// coordinates are processed in panels of 32.
#[derive(Debug, Clone)]
pub struct ProductTracker {
    left: Rows,
    right: Rows,
    x: SparseVec,
    y: SparseVec,
    rows: Vec<usize>,
    row_pos: HashMap<usize, usize>,
    cols: Vec<usize>,
    col_pos: HashMap<usize, usize>,
    core: Vec<Vec<f64>>,
    budget: usize,
    used: usize,
    work: u64,
}

fn changed(old: &SparseVec, new: &SparseVec) -> Vec<usize> {
    let mut out: Vec<usize> = new.iter().filter(|(i, v)| old.get(i) != Some(v)).map(|(&i, _)| i).collect();
    out.extend(old.keys().filter(|i| !new.contains_key(i)).copied());
    out.sort_unstable();
    out
}

impl ProductTracker {
    pub fn new(left: Rows, right: Rows, budget: usize) -> Result<Self> {
        if left.dim() != right.dim() {
            return Err(Error::DimensionMismatch("tracked factors differ in width".into()));
        }
        Ok(ProductTracker {
            left,
            right,
            x: SparseVec::new(),
            y: SparseVec::new(),
            rows: vec![],
            row_pos: HashMap::new(),
            cols: vec![],
            col_pos: HashMap::new(),
            core: vec![],
            budget,
            used: 0,
            work: 0,
        })
    }

    /// Replace the factors, e.g. after rows were appended to them. Stored
    /// products stay valid only if existing rows are unchanged.
    pub fn set_sources(&mut self, left: Rows, right: Rows) {
        self.left = left;
        self.right = right;
    }

    pub fn set_budget(&mut self, budget: usize) {
        self.budget = budget;
    }

    pub fn used(&self) -> usize {
        self.used
    }

    /// Multiply-adds spent on inner products so far.
    pub fn work(&self) -> u64 {
        self.work
    }

    pub fn x(&self) -> &SparseVec {
        &self.x
    }

    pub fn y(&self) -> &SparseVec {
        &self.y
    }

    /// Move to new diagonals. Fails without changing state if the number of
    /// changed coordinates would exceed the budget.
    pub fn update(&mut self, x_new: &SparseVec, y_new: &SparseVec) -> Result<()> {
        let dx = changed(&self.x, x_new);
        let dy = changed(&self.y, y_new);
        let used = self.used + dx.len() + dy.len();
        if used > self.budget {
            return Err(Error::BudgetExceeded { used, budget: self.budget });
        }
        let new_rows: Vec<usize> = x_new.keys().filter(|i| !self.row_pos.contains_key(i)).copied().collect();
        let new_cols: Vec<usize> = y_new.keys().filter(|j| !self.col_pos.contains_key(j)).copied().collect();
        self.track(&new_rows, &new_cols);
        self.x = x_new.clone();
        self.y = y_new.clone();
        self.used = used;
        Ok(())
    }

    /// Make sure products for the listed rows and columns are stored.
    pub fn track(&mut self, new_rows: &[usize], new_cols: &[usize]) {
        let d = self.left.dim() as u64;
        let new_cols: Vec<usize> = new_cols.iter().filter(|j| !self.col_pos.contains_key(j)).copied().collect();
        let new_rows: Vec<usize> = new_rows.iter().filter(|i| !self.row_pos.contains_key(i)).copied().collect();
        if !new_cols.is_empty() && !self.rows.is_empty() {
            let l = self.left.gather(&self.rows).transpose();
            for panel in new_cols.chunks(PANEL) {
                let r = self.right.gather(panel);
                let p = &l * r;
                for (k, row) in self.core.iter_mut().enumerate() {
                    row.extend(p.row(k).iter());
                }
                self.work += d * (self.rows.len() * panel.len()) as u64;
            }
        } else if !new_cols.is_empty() {
            for row in self.core.iter_mut() {
                row.extend(std::iter::repeat_n(0.0, new_cols.len()));
            }
        }
        for &j in &new_cols {
            self.col_pos.insert(j, self.cols.len());
            self.cols.push(j);
        }
        if !new_rows.is_empty() {
            let r = self.right.gather(&self.cols);
            for panel in new_rows.chunks(PANEL) {
                let l = self.left.gather(panel).transpose();
                let p = &l * &r;
                for k in 0..panel.len() {
                    self.core.push(p.row(k).iter().copied().collect());
                }
                self.work += d * (panel.len() * self.cols.len()) as u64;
            }
            for &i in &new_rows {
                self.row_pos.insert(i, self.rows.len());
                self.rows.push(i);
            }
        }
    }

    /// Unscaled l_i . r_j for tracked i and j.
    pub fn core(&self, i: usize, j: usize) -> f64 {
        self.core[self.row_pos[&i]][self.col_pos[&j]]
    }

    pub fn core_block(&self, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
        let cp: Vec<usize> = cols.iter().map(|j| self.col_pos[j]).collect();
        DMatrix::from_fn(rows.len(), cols.len(), |a, b| self.core[self.row_pos[&rows[a]]][cp[b]])
    }

    /// X L R^T Y restricted to supp(x) x supp(y), with those supports.
    pub fn product(&self) -> (Vec<usize>, Vec<usize>, DMatrix<f64>) {
        let rows: Vec<usize> = self.x.keys().copied().collect();
        let cols: Vec<usize> = self.y.keys().copied().collect();
        let mut m = self.core_block(&rows, &cols);
        for (a, i) in rows.iter().enumerate() {
            for (b, j) in cols.iter().enumerate() {
                m[(a, b)] *= self.x[i] * self.y[j];
            }
        }
        (rows, cols, m)
    }
}
