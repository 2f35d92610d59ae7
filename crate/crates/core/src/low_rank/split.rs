use super::explicit::{ExplicitCore, ExplicitInverse};
use super::telemetry::Telemetry;
use super::tracker::{ProductTracker, Rows, SparseVec};
use crate::error::{Error, Result};
use crate::matrix::{gram_product, Cholesky, ConstraintMatrix, PdMatrix, WeightVector};
use crate::rng::{derive, rng_from, Gaussian};
use crate::sketch::{EmbeddingKind, SubspaceEmbedding};
use crate::solver::{
    richardson_operator, richardson_solver, CholeskyInverseOp, DenseOp, Generation, LinearOp, Provenance, RichardsonOp,
    RichardsonOptions, SolverHandle,
};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::sync::Arc;

/// How the Gram matrix of N is compressed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Compression {
    #[default]
    Sparse,
    DenseGaussian,
    /// Use N itself; for debugging only.
    Exact,
}

#[derive(Debug, Clone)]
pub struct SplitConfig {
    /// Weights must stay within a factor beta of the initial ones.
    pub beta: f64,
    /// Cumulative number of coordinate changes before a restart is needed.
    pub budget: usize,
    pub compression: Compression,
    pub embed_eps: f64,
    pub c_embed: f64,
    pub drift_probes: usize,
    pub seed: u64,
}

impl Default for SplitConfig {
    fn default() -> Self {
        SplitConfig {
            beta: 1e6,
            budget: usize::MAX,
            compression: Compression::Sparse,
            embed_eps: 0.5,
            c_embed: crate::sketch::DEFAULT_C_EMBED,
            drift_probes: 5,
            seed: 0,
        }
    }
}

/// K = B_E^{-1} - B_E^{-1} A^T F Q F A B_E^{-1}, an approximate inverse of
/// A^T D A where E holds the weights on the initial support plus a small
/// regularizer and F the weights elsewhere. Q approximates the inverse of
/// the capacitance matrix F + F A B_E^{-1} A^T F.
pub struct SplitInverse {
    be_inv: Arc<ExplicitInverse>,
    /// Columns f_j a_j for j in supp(f).
    af: DMatrix<f64>,
    inner: Option<RichardsonOp>,
}

impl LinearOp for SplitInverse {
    fn dim(&self) -> usize {
        self.be_inv.dim()
    }
    fn apply(&self, b: &DVector<f64>) -> DVector<f64> {
        let z = self.be_inv.apply(b);
        match &self.inner {
            None => z,
            Some(q) => {
                let w = self.af.tr_mul(&z);
                let t = q.apply(&w);
                &z - self.be_inv.apply(&(&self.af * t))
            }
        }
    }
    fn apply_many(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        let z = self.be_inv.apply_many(b);
        match &self.inner {
            None => z,
            Some(q) => {
                let w = self.af.tr_mul(&z);
                let t = q.apply_many(&w);
                &z - self.be_inv.apply_many(&(&self.af * t))
            }
        }
    }
    fn cost(&self) -> u64 {
        let base = self.be_inv.cost();
        match &self.inner {
            None => base,
            Some(q) => 2 * base + q.cost() + 2 * (self.af.len() as u64),
        }
    }
}

impl SplitInverse {
    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let k = self.apply_many(&DMatrix::identity(d, d));
        (&k + k.transpose()) * 0.5
    }
}

/// F + F A B_E^{-1} A^T F on supp(f), applied exactly.
struct CapacitanceOp {
    be_inv: Arc<ExplicitInverse>,
    af: DMatrix<f64>,
    f: DVector<f64>,
}

impl LinearOp for CapacitanceOp {
    fn dim(&self) -> usize {
        self.f.len()
    }
    fn apply(&self, v: &DVector<f64>) -> DVector<f64> {
        let t = self.be_inv.apply(&(&self.af * v));
        self.f.component_mul(v) + self.af.tr_mul(&t)
    }
    fn apply_many(&self, v: &DMatrix<f64>) -> DMatrix<f64> {
        let t = self.be_inv.apply_many(&(&self.af * v));
        let mut out = self.af.tr_mul(&t);
        for (r, fr) in self.f.iter().enumerate() {
            for c in 0..v.ncols() {
                out[(r, c)] += fr * v[(r, c)];
            }
        }
        out
    }
    fn cost(&self) -> u64 {
        self.be_inv.cost() + 2 * self.af.len() as u64 + self.f.len() as u64
    }
}

struct Embedding {
    pi: SubspaceEmbedding,
    rank: usize,
    /// Pi E0^{1/2} A_S B0^{-1}, r x d.
    r_mat: Arc<DMatrix<f64>>,
    /// Left R, right A; columns supp(Delta) and supp(f).
    tracker: ProductTracker,
    all_rows: SparseVec,
}

/// Maintains an approximate inverse of A^T D^(k) A when D^(k) may grow
/// rows outside the support of D^(0), as long as every weight stays within
/// a factor beta of the corresponding initial quadratic form.
pub struct SplitMaintainerState {
    a: Arc<ConstraintMatrix>,
    cfg: SplitConfig,
    d0: Vec<f64>,
    b_orig: PdMatrix,
    s_rows: Vec<usize>,
    s_pos: HashMap<usize, usize>,
    sqrt_e0: Vec<f64>,
    core: ExplicitCore,
    d_cur: Vec<f64>,
    f: SparseVec,
    embedding: Option<Embedding>,
    used: usize,
    round: usize,
    generation: Generation,
    telemetry: Telemetry,
    current: Arc<SplitInverse>,
    compressed_gram: Option<DMatrix<f64>>,
    last_work: u64,
}

impl std::fmt::Debug for SplitMaintainerState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SplitMaintainerState")
            .field("n", &self.a.nrows())
            .field("d", &self.a.ncols())
            .field("round", &self.round)
            .field("used", &self.used)
            .finish()
    }
}

impl SplitMaintainerState {
    pub fn new(a: Arc<ConstraintMatrix>, d0: &WeightVector, cfg: SplitConfig) -> Result<Self> {
        let n = a.nrows();
        if d0.len() != n {
            return Err(Error::DimensionMismatch("initial weights".into()));
        }
        if !(cfg.beta >= 1.0) {
            return Err(Error::InvalidArgument(format!("beta must be at least 1, got {}", cfg.beta)));
        }
        let b_orig = gram_product(&a, d0)?;
        Cholesky::new(b_orig.matrix())?;
        let reg = 1.0 + 1.0 / (10.0 * cfg.beta);
        let e0: Vec<f64> = d0.as_slice().iter().map(|x| x * reg).collect();
        let s_rows = d0.support();
        let s_pos = s_rows.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let core = ExplicitCore::new(a.clone(), &WeightVector::new(e0.clone())?)?;
        let current =
            Arc::new(SplitInverse { be_inv: core.snapshot.clone(), af: DMatrix::zeros(a.ncols(), 0), inner: None });
        Ok(SplitMaintainerState {
            sqrt_e0: e0.iter().map(|x| x.sqrt()).collect(),
            a,
            cfg,
            d0: d0.as_slice().to_vec(),
            b_orig,
            s_rows,
            s_pos,
            core,
            d_cur: d0.as_slice().to_vec(),
            f: SparseVec::new(),
            embedding: None,
            used: 0,
            round: 0,
            generation: Generation::new(),
            telemetry: Telemetry::default(),
            current,
            compressed_gram: None,
            last_work: 0,
        })
    }

    pub fn matrix(&self) -> &Arc<ConstraintMatrix> {
        &self.a
    }

    pub fn config(&self) -> &SplitConfig {
        &self.cfg
    }

    pub fn set_budget(&mut self, budget: usize) {
        self.cfg.budget = budget;
    }

    pub fn used(&self) -> usize {
        self.used
    }

    pub fn round_index(&self) -> usize {
        self.round
    }

    pub fn telemetry(&self) -> &Telemetry {
        &self.telemetry
    }

    pub fn generation(&self) -> &Generation {
        &self.generation
    }

    /// Current approximate inverse K.
    pub fn approx_inverse(&self) -> Arc<SplitInverse> {
        self.current.clone()
    }

    /// Last compressed Gram matrix (Pi N)^T (Pi N), if rows outside the
    /// initial support are active.
    pub fn compressed_gram(&self) -> Option<&DMatrix<f64>> {
        self.compressed_gram.as_ref()
    }

    pub fn embedding(&self) -> Option<&SubspaceEmbedding> {
        self.embedding.as_ref().map(|e| &e.pi)
    }

    /// Support of the initial weights, in the column order of the embedding.
    pub fn initial_support(&self) -> &[usize] {
        &self.s_rows
    }

    /// Weights currently represented.
    pub fn weights(&self) -> &[f64] {
        &self.d_cur
    }

    /// Append rows to A. New rows start with weight zero and are always
    /// outside the initial support.
    pub fn extend_rows(&mut self, a: Arc<ConstraintMatrix>) -> Result<()> {
        let old = self.a.nrows();
        if a.nrows() < old || a.ncols() != self.a.ncols() {
            return Err(Error::DimensionMismatch("extended matrix must keep all rows".into()));
        }
        self.core.extend(a.clone());
        if let Some(e) = &mut self.embedding {
            e.tracker.set_sources(Rows::Dense(e.r_mat.clone()), Rows::Sparse(a.clone()));
        }
        self.d0.resize(a.nrows(), 0.0);
        self.d_cur.resize(a.nrows(), 0.0);
        self.sqrt_e0.resize(a.nrows(), 0.0);
        self.a = a;
        Ok(())
    }

    fn drift_check(&self, d_k: &WeightVector, b_k: &PdMatrix) -> Result<()> {
        // coordinatewise drift on S bounds the drift of A^T E A exactly
        let beta = self.cfg.beta;
        for &i in &self.s_rows {
            let q = d_k[i] / self.d0[i];
            if !(q <= beta && q >= 1.0 / beta) {
                return Err(Error::DriftViolation { quotient: q, beta });
            }
        }
        let d = self.a.ncols();
        let mut g = Gaussian::new(rng_from(self.cfg.seed, &[0xd21f, self.round as u64]));
        for _ in 0..self.cfg.drift_probes {
            let mut x = DVector::zeros(d);
            g.fill(x.as_mut_slice());
            let q = b_k.quad(&x) / self.b_orig.quad(&x);
            if !(q <= self.cfg.beta && q >= 1.0 / self.cfg.beta) {
                return Err(Error::DriftViolation { quotient: q, beta: self.cfg.beta });
            }
        }
        Ok(())
    }

    fn ensure_embedding(&mut self, rank: usize) -> Result<u64> {
        if self.embedding.as_ref().is_some_and(|e| e.rank >= rank) {
            return Ok(0);
        }
        let rank = rank.max(4).next_power_of_two();
        let kind = match self.cfg.compression {
            Compression::DenseGaussian => EmbeddingKind::DenseGaussian,
            _ => EmbeddingKind::Sparse,
        };
        let seed = derive(self.cfg.seed, &[0xe1b, rank as u64]);
        let pi = SubspaceEmbedding::new(rank, self.s_rows.len(), self.cfg.embed_eps, self.cfg.c_embed, kind, seed)?;
        let scale: Vec<f64> = self.s_rows.iter().map(|&i| self.sqrt_e0[i]).collect();
        let p = pi.apply_rows(&self.a, &self.s_rows, &scale);
        let r_mat = Arc::new(p * self.core.base_inv.as_ref());
        let d = self.a.ncols() as u64;
        let work = self.a.nnz() as u64 * pi.sparsity() as u64 + pi.rows() as u64 * d * d;
        let tracker = ProductTracker::new(Rows::Dense(r_mat.clone()), Rows::Sparse(self.a.clone()), usize::MAX)?;
        let all_rows = (0..pi.rows()).map(|r| (r, 1.0)).collect();
        self.embedding = Some(Embedding { pi, rank, r_mat, tracker, all_rows });
        Ok(work)
    }

    /// Move to weights `d_k` and return a solver for A^T D^(k) A.
    pub fn round(&mut self, d_k: &WeightVector) -> Result<SolverHandle> {
        let (k, b_k) = self.advance(d_k)?;
        let n_op: Arc<dyn LinearOp> = k;
        let m_op: Arc<dyn LinearOp> = Arc::new(DenseOp(b_k.into_matrix()));
        let opts = RichardsonOptions {
            seed: derive(self.cfg.seed, &[0x0a7, self.round as u64]),
            provenance: Provenance::Maintained,
            ..RichardsonOptions::default()
        };
        let handle = richardson_solver(m_op, n_op, opts)?;
        Ok(handle.guarded(&self.generation))
    }

    /// Move to weights `d_k` and return only the approximate inverse.
    pub fn update(&mut self, d_k: &WeightVector) -> Result<Arc<SplitInverse>> {
        Ok(self.advance(d_k)?.0)
    }

    fn advance(&mut self, d_k: &WeightVector) -> Result<(Arc<SplitInverse>, PdMatrix)> {
        let n = self.a.nrows();
        if d_k.len() != n {
            return Err(Error::DimensionMismatch(format!("{} weights for {n} rows", d_k.len())));
        }
        let changes = (0..n).filter(|&i| d_k[i] != self.d_cur[i]).count();
        if self.used + changes > self.cfg.budget {
            return Err(Error::BudgetExceeded { used: self.used + changes, budget: self.cfg.budget });
        }
        let b_k = gram_product(&self.a, d_k)?;
        self.drift_check(d_k, &b_k)?;

        let mut delta = SparseVec::new();
        let mut sdiff = SparseVec::new();
        let mut f = SparseVec::new();
        let reg = 1.0 / (10.0 * self.cfg.beta);
        for i in 0..n {
            if self.s_pos.contains_key(&i) {
                let dl = d_k[i] - self.d0[i];
                if dl != 0.0 {
                    delta.insert(i, dl);
                    let e = d_k[i] + reg * self.d0[i];
                    sdiff.insert(i, e.sqrt() - self.sqrt_e0[i]);
                }
            } else if d_k[i] > 0.0 {
                f.insert(i, d_k[i]);
            }
        }
        let work_before = self.core.tracker.work() + self.core.capacitance_work;
        self.core.set_delta(delta.clone(), &f)?;
        let mut work = self.core.tracker.work() + self.core.capacitance_work - work_before;

        let be_inv = self.core.snapshot.clone();
        let d = self.a.ncols();
        let f_ids: Vec<usize> = f.keys().copied().collect();
        let uf = f_ids.len();
        let mut af = DMatrix::zeros(d, uf);
        for (k, &j) in f_ids.iter().enumerate() {
            let (c, x) = self.a.row(j);
            for (&col, &v) in c.iter().zip(x) {
                af[(col, k)] = f[&j] * v;
            }
        }
        let inner = if uf == 0 {
            self.compressed_gram = None;
            None
        } else {
            let (gram, w) = self.compress(&delta, &sdiff, &f, &f_ids)?;
            work += w;
            let fv = DVector::from_iterator(uf, f_ids.iter().map(|j| f[j]));
            let m_tilde = DMatrix::from_diagonal(&fv) + &gram;
            self.compressed_gram = Some(gram);
            let chol = Cholesky::new(&m_tilde)?;
            let m_op: Arc<dyn LinearOp> = Arc::new(CapacitanceOp { be_inv: be_inv.clone(), af: af.clone(), f: fv });
            let n_op: Arc<dyn LinearOp> = Arc::new(CholeskyInverseOp(chol));
            let eps_in = (1.0 / (20.0 * self.cfg.beta * self.cfg.beta)).min(0.5);
            let opts = RichardsonOptions {
                seed: derive(self.cfg.seed, &[0x1a2, self.round as u64]),
                ..RichardsonOptions::default()
            };
            let op = richardson_operator(m_op, n_op, eps_in, &opts)?;
            Some(op)
        };
        let k = Arc::new(SplitInverse { be_inv, af, inner });
        self.current = k.clone();
        self.f = f;
        self.d_cur = d_k.as_slice().to_vec();
        self.used += changes;
        self.round += 1;
        self.generation.advance();
        let r = self.round;
        self.telemetry.record(r, "changed", changes as u64);
        self.telemetry.record(r, "support_delta", self.core.delta.len() as u64);
        self.telemetry.record(r, "support_f", uf as u64);
        self.telemetry.record(r, "work", work);
        self.last_work = work;
        Ok((k, b_k))
    }

    /// Work units spent by the last round.
    pub fn last_work(&self) -> u64 {
        self.last_work
    }

    /// (Pi N)^T (Pi N) restricted to supp(f), or N^T N itself in exact mode.
    fn compress(
        &mut self,
        delta: &SparseVec,
        sdiff: &SparseVec,
        f: &SparseVec,
        f_ids: &[usize],
    ) -> Result<(DMatrix<f64>, u64)> {
        let dl_ids: Vec<usize> = delta.keys().copied().collect();
        let uf = f_ids.len();
        let fv = DVector::from_iterator(uf, f_ids.iter().map(|j| f[j]));
        let g_df = self.core.tracker.core_block(&dl_ids, f_ids);
        // (Delta V Delta) G[Delta, f] F
        let mut vg = &self.core.dvd * &g_df;
        for c in 0..uf {
            vg.column_mut(c).scale_mut(fv[c]);
        }
        if self.cfg.compression == Compression::Exact {
            let d = self.a.ncols();
            let mut cf = DMatrix::zeros(d, uf);
            for (k, &j) in f_ids.iter().enumerate() {
                for t in 0..d {
                    cf[(t, k)] = self.core.c[(j, t)];
                }
            }
            let mut af = DMatrix::zeros(d, uf);
            for (k, &j) in f_ids.iter().enumerate() {
                let (c, x) = self.a.row(j);
                for (&col, &v) in c.iter().zip(x) {
                    af[(col, k)] = v;
                }
            }
            let g_ff = cf.tr_mul(&af);
            let mut ntn = DMatrix::zeros(uf, uf);
            for a in 0..uf {
                for b in 0..uf {
                    ntn[(a, b)] = fv[a] * g_ff[(a, b)] * fv[b];
                }
            }
            let mut gdf_f = g_df.clone();
            for c in 0..uf {
                gdf_f.column_mut(c).scale_mut(fv[c]);
            }
            ntn -= gdf_f.tr_mul(&vg);
            let ntn = (&ntn + ntn.transpose()) * 0.5;
            return Ok((ntn, (d * uf * uf) as u64));
        }

        let mut work = self.ensure_embedding(uf)?;
        let emb = self.embedding.as_mut().expect("embedding built");
        let mut cols = delta.clone();
        for (&j, &v) in f {
            cols.insert(j, v);
        }
        let before = emb.tracker.work();
        emb.tracker.update(&emb.all_rows, &cols)?;
        work += emb.tracker.work() - before;
        let rows: Vec<usize> = (0..emb.pi.rows()).collect();
        let r = rows.len();

        // T1 = R A_f^T F
        let mut pn = emb.tracker.core_block(&rows, f_ids);
        for c in 0..uf {
            pn.column_mut(c).scale_mut(fv[c]);
        }
        if !dl_ids.is_empty() {
            let x_cols: Vec<usize> = dl_ids.iter().map(|i| self.s_pos[i]).collect();
            let sd = DVector::from_iterator(dl_ids.len(), dl_ids.iter().map(|i| sdiff[i]));
            // T2 = Pi_X diag(sdiff) G[X, f] F
            let mut t2 = g_df.clone();
            for c in 0..uf {
                t2.column_mut(c).scale_mut(fv[c]);
            }
            // T4 = Pi_X diag(sdiff) G[X, Delta] (Delta V Delta) G[Delta, f] F
            let g_dd = self.core.tracker.core_block(&dl_ids, &dl_ids);
            let mut inner = t2 - &g_dd * &vg;
            for a in 0..dl_ids.len() {
                inner.row_mut(a).scale_mut(sd[a]);
            }
            pn += emb.pi.apply_columns(&x_cols, &inner);
            // T3 = R A_Delta^T (Delta V Delta) G[Delta, f] F
            let r_d = emb.tracker.core_block(&rows, &dl_ids);
            pn -= &r_d * &vg;
            let ud = dl_ids.len();
            work += (r * ud * uf + ud * ud * uf) as u64;
        }
        work += (r * uf * uf) as u64;
        let gram = pn.tr_mul(&pn);
        Ok(((&gram + gram.transpose()) * 0.5, work))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::generalized_eigen_range;

    fn instance(n: usize, d: usize) -> Arc<ConstraintMatrix> {
        let mut g = Gaussian::new(rng_from(n as u64, &[d as u64]));
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| g.sample()).collect()).collect();
        Arc::new(ConstraintMatrix::from_rows(&rows).unwrap())
    }

    /// Pi N computed densely, for comparison with the tracked assembly.
    fn dense_pi_n(st: &SplitMaintainerState, d_k: &[f64]) -> DMatrix<f64> {
        let a = st.a.to_dense();
        let beta = st.cfg.beta;
        let n = a.nrows();
        let e: Vec<f64> =
            (0..n).map(|i| if st.s_pos.contains_key(&i) { d_k[i] + st.d0[i] / (10.0 * beta) } else { 0.0 }).collect();
        let be = a.transpose() * DMatrix::from_diagonal(&DVector::from_vec(e.clone())) * &a;
        let be_inv = be.try_inverse().unwrap();
        let f_ids: Vec<usize> = (0..n).filter(|i| !st.s_pos.contains_key(i) && d_k[*i] > 0.0).collect();
        let mut af = DMatrix::zeros(a.ncols(), f_ids.len());
        for (k, &j) in f_ids.iter().enumerate() {
            af.set_column(k, &(a.row(j).transpose() * d_k[j]));
        }
        let mut es = DMatrix::zeros(st.s_rows.len(), a.ncols());
        for (k, &i) in st.s_rows.iter().enumerate() {
            es.set_row(k, &(a.row(i) * e[i].sqrt()));
        }
        let nmat = es * be_inv * af;
        st.embedding().unwrap().apply_dense(&nmat)
    }

    #[test]
    fn tracked_assembly_matches_dense() {
        let (n, d) = (30, 4);
        let a = instance(n, d);
        let mut d0 = vec![1.0; n];
        for v in d0.iter_mut().skip(24) {
            *v = 0.0;
        }
        let cfg = SplitConfig { beta: 10.0, seed: 3, ..SplitConfig::default() };
        let mut st = SplitMaintainerState::new(a, &WeightVector::new(d0.clone()).unwrap(), cfg).unwrap();
        let mut w = d0.clone();
        for k in 0..4 {
            w[24 + k] = 0.5 + k as f64;
            w[k] *= 1.7;
            st.round(&WeightVector::new(w.clone()).unwrap()).unwrap();
            let pn = dense_pi_n(&st, &w);
            let expect = pn.tr_mul(&pn);
            let got = st.compressed_gram().unwrap();
            assert!((got - &expect).amax() < 1e-9 * expect.amax().max(1.0), "round {k}");
        }
    }

    #[test]
    fn approximate_inverse_within_band() {
        let (n, d) = (40, 6);
        let a = instance(n, d);
        let mut d0 = vec![1.0; n];
        for v in d0.iter_mut().skip(30) {
            *v = 0.0;
        }
        let cfg = SplitConfig { beta: 10.0, seed: 9, ..SplitConfig::default() };
        let mut st = SplitMaintainerState::new(a.clone(), &WeightVector::new(d0.clone()).unwrap(), cfg).unwrap();
        let mut w = d0;
        for k in 0..5 {
            w[30 + k] = 1.0;
            let wk = WeightVector::new(w.clone()).unwrap();
            let h = st.round(&wk).unwrap();
            let b = gram_product(&a, &wk).unwrap();
            let b_inv = b.matrix().clone().try_inverse().unwrap();
            let (lo, hi) = generalized_eigen_range(&st.approx_inverse().to_dense(), &b_inv).unwrap();
            assert!(lo >= (-1.0f64).exp() && hi <= 1.0f64.exp(), "{lo} {hi}");
            let rhs = DVector::from_fn(d, |i, _| i as f64 - 2.0);
            let x = h.solve(&rhs, 1e-8).unwrap();
            let exact = &b_inv * &rhs;
            let err = b.quad(&(&x - &exact)) / b.quad(&exact);
            assert!(err <= 1e-8);
        }
    }

    #[test]
    fn drift_violation_detected() {
        let a = instance(20, 3);
        let cfg = SplitConfig { beta: 2.0, ..SplitConfig::default() };
        let mut st = SplitMaintainerState::new(a, &WeightVector::ones(20), cfg).unwrap();
        let w = WeightVector::new(vec![10.0; 20]).unwrap();
        assert!(matches!(st.round(&w), Err(Error::DriftViolation { .. })));
        assert_eq!(st.round_index(), 0);
    }
}
