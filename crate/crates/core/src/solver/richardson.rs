use super::{LinearOp, Provenance, Solve, SolverHandle};
use crate::error::{Error, Result};
use crate::rng::{rng_from, Gaussian};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

/// Options for [`richardson_solver`].
#[derive(Debug, Clone)]
pub struct RichardsonOptions {
    /// Known bound with M^{-1}/L <= N <= L M^{-1}. Estimated when absent.
    pub l: Option<f64>,
    /// Residual estimates below this level are attributed to rounding and
    /// never reported as non-convergence.
    pub fp_floor: f64,
    pub power_iters: usize,
    pub seed: u64,
    pub provenance: Provenance,
}

impl Default for RichardsonOptions {
    fn default() -> Self {
        RichardsonOptions {
            l: None,
            fp_floor: 1e-20,
            power_iters: 20,
            seed: 0x5eed,
            provenance: Provenance::Richardson,
        }
    }
}

impl RichardsonOptions {
    pub fn with_l(l: f64) -> Self {
        RichardsonOptions { l: Some(l), ..Self::default() }
    }
}

/// Number of correction steps needed for accuracy `eps` when the
/// preconditioned operator has spectrum inside [1/L, L].
pub fn richardson_steps(eps: f64, l: f64) -> usize {
    if l <= 1.0 {
        return 0;
    }
    let z = 0.5 * (eps * l.powi(-4)).ln() / (1.0 - l.powi(-2)).ln();
    let cap = 10.0 * (l * l * (1.0 / eps).ln()).ceil();
    z.ceil().min(cap).max(0.0) as usize
}

/// Power-iteration estimates of the extreme eigenvalues of N M.
pub fn estimate_spectrum(m: &dyn LinearOp, n: &dyn LinearOp, iters: usize, seed: u64) -> Result<(f64, f64)> {
    let d = m.dim();
    if n.dim() != d {
        return Err(Error::DimensionMismatch("operators of different size".into()));
    }
    let mut g = Gaussian::new(rng_from(seed, &[0x5bec]));
    let mut start = DVector::zeros(d);
    g.fill(start.as_mut_slice());
    // Rayleigh quotients in the M inner product, where N M is symmetric.
    let rayleigh = |v: &DVector<f64>, w: &DVector<f64>| -> Option<f64> {
        let mv = m.apply(v);
        let den = v.dot(&mv);
        (den > 0.0).then(|| w.dot(&mv) / den)
    };
    let mut v = start.clone();
    let mut lmax = 0.0f64;
    for _ in 0..iters.max(1) {
        let w = n.apply(&m.apply(&v));
        if let Some(q) = rayleigh(&v, &w) {
            lmax = lmax.max(q);
        }
        let nw = w.norm();
        if !(nw > 0.0 && nw.is_finite()) {
            return Err(Error::NotPositiveDefinite("preconditioned operator vanished".into()));
        }
        v = w / nw;
    }
    let mut u = start;
    let mut shift = 0.0f64;
    for _ in 0..iters.max(1) {
        let w = &u * lmax - n.apply(&m.apply(&u));
        if let Some(q) = rayleigh(&u, &w) {
            shift = shift.max(q);
        }
        let nw = w.norm();
        if !(nw > 0.0 && nw.is_finite()) {
            break;
        }
        u = w / nw;
    }
    let lmin = (lmax - shift).max(lmax * 1e-14);
    Ok((lmin, lmax))
}

/// The fixed linear map of `steps` Richardson corrections,
/// (1/L) N sum_{k=0}^{steps} (I - M N / L)^k.
pub struct RichardsonOp {
    m: Arc<dyn LinearOp>,
    n: Arc<dyn LinearOp>,
    l: f64,
    steps: usize,
}

impl RichardsonOp {
    pub fn new(m: Arc<dyn LinearOp>, n: Arc<dyn LinearOp>, l: f64, steps: usize) -> Self {
        RichardsonOp { m, n, l, steps }
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// Iterate and also return the final residual b - M x.
    fn run(&self, b: &DMatrix<f64>, steps: usize) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
        let inv_l = 1.0 / self.l;
        let nb = self.n.apply_many(b);
        let mut x = &nb * inv_l;
        let mut r = b - self.m.apply_many(&x);
        for _ in 0..steps {
            x += self.n.apply_many(&r) * inv_l;
            r = b - self.m.apply_many(&x);
        }
        (x, r, nb)
    }

    /// Continue `steps` corrections from x.
    fn resume(&self, b: &DMatrix<f64>, mut x: DMatrix<f64>, steps: usize) -> (DMatrix<f64>, DMatrix<f64>) {
        let inv_l = 1.0 / self.l;
        let mut r = b - self.m.apply_many(&x);
        for _ in 0..steps {
            x += self.n.apply_many(&r) * inv_l;
            r = b - self.m.apply_many(&x);
        }
        (x, r)
    }

    /// Lower bound on the squared relative M-norm error of column `j`,
    /// (r^T N r) / (b^T N b) / L^2.
    fn error_bound(&self, b: &DMatrix<f64>, r: &DMatrix<f64>, nb: &DMatrix<f64>, j: usize) -> f64 {
        let bnb = b.column(j).dot(&nb.column(j));
        if bnb <= 0.0 {
            return 0.0;
        }
        let rj = r.column(j).into_owned();
        rj.dot(&self.n.apply(&rj)) / bnb / (self.l * self.l)
    }
}

impl LinearOp for RichardsonOp {
    fn dim(&self) -> usize {
        self.m.dim()
    }
    fn apply(&self, b: &DVector<f64>) -> DVector<f64> {
        let inv_l = 1.0 / self.l;
        let mut x = self.n.apply(b) * inv_l;
        for _ in 0..self.steps {
            let r = b - self.m.apply(&x);
            x += self.n.apply(&r) * inv_l;
        }
        x
    }
    fn apply_many(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let inv_l = 1.0 / self.l;
        let mut x = self.n.apply_many(b) * inv_l;
        for _ in 0..self.steps {
            let r = b - self.m.apply_many(&x);
            x += self.n.apply_many(&r) * inv_l;
        }
        x
    }
    fn cost(&self) -> u64 {
        (self.steps as u64 + 1) * (self.m.cost() + self.n.cost())
    }
}

/// Resolve the L to use: the supplied bound, or twice the estimated
/// spectral spread of N M.
pub fn resolve_l(m: &dyn LinearOp, n: &dyn LinearOp, opts: &RichardsonOptions) -> Result<f64> {
    match opts.l {
        Some(l) if l.is_finite() && l > 0.0 => Ok(l.max(1.0)),
        Some(l) => Err(Error::InvalidArgument(format!("L must be positive, got {l}"))),
        None => {
            let (lo, hi) = estimate_spectrum(m, n, opts.power_iters, opts.seed)?;
            Ok((2.0 * hi.max(1.0 / lo)).max(1.0))
        }
    }
}

struct RichardsonBackend {
    op: RichardsonOp,
    fp_floor: f64,
}

/// Misses below this level are attributed to rounding.
const ROUNDING_CAP: f64 = 1e-12;
/// Largest miss that triggers further iteration instead of an error.
const STAGNATION_CAP: f64 = 1e-6;
/// Blocks of further steps before a slow but shrinking run is reported.
const MAX_BLOCKS: usize = 8;

/// Checks the error estimates of a finished run of `steps` steps. Small
/// misses get further blocks of max(steps, L^2) steps: the run is accepted
/// once every miss is below `ROUNDING_CAP` or shrinks less than tenfold in a
/// block (rounding), and reported when an estimate grows or the blocks run
/// out. Returns the accepted iterate.
#[allow(clippy::too_many_arguments)]
fn accept(
    op: &RichardsonOp,
    b: &DMatrix<f64>,
    mut x: DMatrix<f64>,
    r: &DMatrix<f64>,
    nb: &DMatrix<f64>,
    steps: usize,
    eps: f64,
    fp_floor: f64,
) -> Result<DMatrix<f64>> {
    let miss = |e: f64| !e.is_finite() || (e > eps && e > fp_floor);
    let mut est: Vec<f64> = (0..b.ncols()).map(|j| op.error_bound(b, r, nb, j)).collect();
    let worst = |est: &[f64]| {
        est.iter()
            .copied()
            .filter(|&e| miss(e))
            .fold(0.0f64, |m, e| if e.is_finite() { m.max(e) } else { f64::INFINITY })
    };
    let w = worst(&est);
    if w == 0.0 {
        return Ok(x);
    }
    if !(w <= STAGNATION_CAP) {
        return Err(Error::NonConvergence { estimate: w, target: eps });
    }
    let block = steps.max((op.l * op.l).ceil() as usize).max(1);
    for _ in 0..MAX_BLOCKS {
        let (x2, r2) = op.resume(b, x, block);
        x = x2;
        let next: Vec<f64> = (0..b.ncols()).map(|j| op.error_bound(b, &r2, nb, j)).collect();
        let mut done = true;
        for (&e, &e2) in est.iter().zip(&next) {
            if !miss(e2) || e2 <= ROUNDING_CAP || (e2 >= 0.1 * e && e2 <= STAGNATION_CAP) {
                continue;
            }
            if !(e2 <= e) {
                return Err(Error::NonConvergence { estimate: e2, target: eps });
            }
            done = false;
        }
        if done {
            return Ok(x);
        }
        est = next;
    }
    Err(Error::NonConvergence { estimate: worst(&est), target: eps })
}

impl RichardsonBackend {
    fn checked(&self, b: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
        let steps = richardson_steps(eps, self.op.l);
        let (x, r, nb) = self.op.run(b, steps);
        accept(&self.op, b, x, &r, &nb, steps, eps, self.fp_floor)
    }
}

impl Solve for RichardsonBackend {
    fn dim(&self) -> usize {
        self.op.dim()
    }

    fn solve(&self, b: &DVector<f64>, eps: f64) -> Result<DVector<f64>> {
        let bm = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
        let x = self.checked(&bm, eps)?;
        Ok(x.column(0).into_owned())
    }

    fn solve_many(&self, b: &DMatrix<f64>, eps: f64) -> Result<DMatrix<f64>> {
        self.checked(b, eps)
    }

    fn cost(&self, eps: f64) -> u64 {
        let z = richardson_steps(eps, self.op.l) as u64 + 1;
        z * (self.op.m.cost() + self.op.n.cost())
    }
}

/// Turn an approximate inverse N of M into a solver for M.
pub fn richardson_solver(m: Arc<dyn LinearOp>, n: Arc<dyn LinearOp>, opts: RichardsonOptions) -> Result<SolverHandle> {
    if m.dim() != n.dim() {
        return Err(Error::DimensionMismatch(format!("M is {0} x {0} but N is {1} x {1}", m.dim(), n.dim())));
    }
    let l = resolve_l(m.as_ref(), n.as_ref(), &opts)?;
    let backend = RichardsonBackend { op: RichardsonOp::new(m, n, l, 0), fp_floor: opts.fp_floor };
    Ok(SolverHandle::new(Arc::new(backend), opts.provenance, true))
}

/// A fixed-accuracy Richardson operator for M built from N, after checking
/// convergence on a random probe.
pub fn richardson_operator(
    m: Arc<dyn LinearOp>,
    n: Arc<dyn LinearOp>,
    eps: f64,
    opts: &RichardsonOptions,
) -> Result<RichardsonOp> {
    if m.dim() != n.dim() {
        return Err(Error::DimensionMismatch("operators of different size".into()));
    }
    let l = resolve_l(m.as_ref(), n.as_ref(), opts)?;
    let op = RichardsonOp::new(m, n, l, richardson_steps(eps, l));
    let mut g = Gaussian::new(rng_from(opts.seed, &[0x9b0e]));
    let mut b = DMatrix::zeros(op.dim(), 1);
    g.fill(b.as_mut_slice());
    let (x, r, nb) = op.run(&b, op.steps);
    accept(&op, &b, x, &r, &nb, op.steps, eps, opts.fp_floor)?;
    Ok(op)
}

#[cfg(test)]
mod tests {
    use super::super::DenseOp;
    use super::*;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn diagonal_example() {
        let m: Arc<dyn LinearOp> = Arc::new(DenseOp(dmatrix![1.0, 0.0; 0.0, 4.0]));
        let n: Arc<dyn LinearOp> = Arc::new(DenseOp(dmatrix![1.0, 0.0; 0.0, 1.0 / 3.0]));
        let s = richardson_solver(m, n, RichardsonOptions::with_l(4.0 / 3.0)).unwrap();
        let x = s.solve(&dvector![1.0, 1.0], 1e-6).unwrap();
        let err = (x[0] - 1.0).powi(2) + 4.0 * (x[1] - 0.25).powi(2);
        assert!(err <= 1e-6 * 1.25, "{x}");
    }

    #[test]
    fn steps_formula_and_cap() {
        assert_eq!(richardson_steps(0.1, 1.0), 0);
        let l: f64 = 2.0;
        let expect = (0.5 * (1e-6 * l.powi(-4)).ln() / (1.0 - l.powi(-2)).ln()).ceil() as usize;
        assert_eq!(richardson_steps(1e-6, l), expect);
        let cap = 10 * (1.0f64.powi(2) * (1.0f64 / 1e-300).ln()).ceil() as usize;
        assert!(richardson_steps(1e-300, 1.0 + 1e-9) <= cap.max(1) * 2);
    }

    #[test]
    fn wrong_l_reports_nonconvergence() {
        let m: Arc<dyn LinearOp> = Arc::new(DenseOp(dmatrix![1.0, 0.0; 0.0, 100.0]));
        let n: Arc<dyn LinearOp> = Arc::new(DenseOp(DMatrix::identity(2, 2)));
        let s = richardson_solver(m, n, RichardsonOptions::with_l(1.5)).unwrap();
        assert!(matches!(s.solve(&dvector![1.0, 1.0], 1e-8), Err(Error::NonConvergence { .. })));
    }

    #[test]
    fn estimated_l_converges() {
        let m: Arc<dyn LinearOp> = Arc::new(DenseOp(dmatrix![3.0, 1.0; 1.0, 2.0]));
        let n: Arc<dyn LinearOp> = Arc::new(DenseOp(DMatrix::identity(2, 2) * 0.4));
        let s = richardson_solver(m, n, RichardsonOptions::default()).unwrap();
        let b = dvector![1.0, -2.0];
        let x = s.solve(&b, 1e-10).unwrap();
        let exact = dmatrix![3.0, 1.0; 1.0, 2.0].try_inverse().unwrap() * &b;
        assert!((x - exact).amax() < 1e-4);
        let many = s.solve_many(&DMatrix::from_columns(&[b.clone(), b]), 1e-10).unwrap();
        assert!((many.column(0) - many.column(1)).amax() == 0.0);
    }

    #[test]
    fn rounding_floor_is_accepted() {
        let d = 6;
        let q = nalgebra::linalg::QR::new(DMatrix::from_fn(d, d, |i, j| ((i * 7 + j * 3) % 11) as f64 - 5.0)).q();
        let diag = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| 10f64.powi(2 * i as i32)));
        let m = &q * diag * q.transpose();
        let m = (&m + m.transpose()) * 0.5;
        let inv = m.clone().try_inverse().unwrap();
        let mo: Arc<dyn LinearOp> = Arc::new(DenseOp(m.clone()));
        let no: Arc<dyn LinearOp> = Arc::new(DenseOp(inv * 0.9));
        let s =
            richardson_solver(mo, no, RichardsonOptions { fp_floor: 0.0, ..RichardsonOptions::with_l(1.2) }).unwrap();
        let b = DVector::from_fn(d, |i, _| 1.0 + i as f64);
        let x = s.solve(&b, 1e-40).unwrap();
        let exact = m.clone().cholesky().unwrap().solve(&b);
        let e = &x - &exact;
        assert!(e.dot(&(&m * &e)) <= 1e-12 * exact.dot(&(&m * &exact)));
    }
}
