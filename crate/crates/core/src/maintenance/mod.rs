//! Inverse maintenance sessions. A session receives a weight vector each
//! round and returns a solver for A^T D A, reusing a row-sampled
//! sparsifier and a low-rank maintainer across rounds.

mod stability;
pub mod synthetic;

pub use stability::{
    check_l2, check_sigma, leverage_stability_check, log_change, weighted_norm, StabilityReport, STABILITY_BOUND,
};

use crate::error::{Error, Result};
use crate::low_rank::{Compression, SplitConfig, SplitInverse, SplitMaintainerState};
use crate::matrix::{gram_product, ConstraintMatrix, PdMatrix, WeightVector};
use crate::rng::{derive, rng_from};
use crate::sketch::{estimate_leverage, LeverageConfig};
use crate::solver::{
    exact_factorize, richardson_solver, DenseOp, Generation, LinearOp, Provenance, RichardsonOptions, SolverHandle,
};
use rand::Rng;
use std::fmt::Write;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Mode {
    /// Rounds satisfy ||ln d' - ln d||_2 <= 0.1; no sampling.
    L2,
    /// Rounds satisfy the leverage-weighted bound; rows are resampled.
    #[default]
    Sigma,
    /// Sigma mode plus rounds that insert or remove up to K rows.
    Churn,
}

impl std::str::FromStr for Mode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "l2" => Ok(Mode::L2),
            "sigma" => Ok(Mode::Sigma),
            "churn" => Ok(Mode::Churn),
            _ => Err(Error::InvalidArgument(format!("unknown mode {s:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct StabilityConfig {
    pub mode: Mode,
    pub beta: f64,
    /// Oversampling factor; defaults to 1000 c_s max(ln d, 1).
    pub gamma: Option<f64>,
    pub c_s: f64,
    /// A coordinate is re-drawn once d or its leverage estimate leaves
    /// this multiplicative band around its value at the last draw.
    pub thresholds: (f64, f64),
    pub eps_tau: f64,
    pub c_jl: f64,
    /// Largest number of inserted plus removed rows in one churn round.
    pub churn_k: usize,
    /// Cumulative change budget of the low-rank maintainer; `None` uses
    /// max(d, 4 r^2) with r the rounds since the last restart.
    pub budget: Option<usize>,
    pub compression: Compression,
    pub seed: u64,
}

impl Default for StabilityConfig {
    fn default() -> Self {
        StabilityConfig {
            mode: Mode::Sigma,
            beta: 1e6,
            gamma: None,
            c_s: 4.0,
            thresholds: (0.85, 1.15),
            eps_tau: 0.1,
            c_jl: 8.0,
            churn_k: 8,
            budget: None,
            compression: Compression::Sparse,
            seed: 0,
        }
    }
}

impl StabilityConfig {
    pub fn gamma(&self, d: usize) -> f64 {
        self.gamma.unwrap_or(1000.0 * self.c_s * (d as f64).ln().max(1.0))
    }

    fn validate(&self) -> Result<()> {
        let (lo, hi) = self.thresholds;
        if !(lo > 0.0 && lo < 1.0 && hi > 1.0 && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("thresholds must satisfy 0 < lo < 1 < hi, got ({lo}, {hi})")));
        }
        if self.gamma.is_some_and(|g| !(g > 0.0)) || !(self.beta >= 1.0) || !(self.c_s > 0.0) {
            return Err(Error::InvalidArgument("gamma, c_s must be positive and beta at least 1".into()));
        }
        if !(self.eps_tau > 0.0 && self.eps_tau <= 0.5) {
            return Err(Error::InvalidArgument(format!("eps_tau must lie in (0, 0.5], got {}", self.eps_tau)));
        }
        Ok(())
    }

    fn leverage(&self) -> LeverageConfig {
        LeverageConfig { eps_tau: self.eps_tau, c_jl: self.c_jl, ..LeverageConfig::default() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoundStats {
    pub round: usize,
    pub resampled: usize,
    pub kept_rows: usize,
    pub work_units: u64,
    pub restarted: bool,
}

#[derive(Clone, Copy)]
enum Check {
    L2,
    Sigma,
    None,
}

pub struct MaintenanceSession {
    a: Arc<ConstraintMatrix>,
    cfg: StabilityConfig,
    d_cur: Vec<f64>,
    d_old: Vec<f64>,
    sigma_old: Vec<f64>,
    tau: Vec<f64>,
    h: Vec<f64>,
    inner: SplitMaintainerState,
    k_cur: Arc<SplitInverse>,
    round: usize,
    since_restart: usize,
    restarts: usize,
    generation: Generation,
    stats: Vec<RoundStats>,
    last_resampled: Vec<usize>,
}

impl std::fmt::Debug for MaintenanceSession {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MaintenanceSession")
            .field("n", &self.a.nrows())
            .field("d", &self.a.ncols())
            .field("mode", &self.cfg.mode)
            .field("round", &self.round)
            .finish()
    }
}

impl MaintenanceSession {
    /// Start a session at weights `d0` and return a solver for A^T D0 A.
    pub fn new(a: Arc<ConstraintMatrix>, d0: &WeightVector, cfg: StabilityConfig) -> Result<(Self, SolverHandle)> {
        cfg.validate()?;
        let n = a.nrows();
        if d0.len() != n {
            return Err(Error::DimensionMismatch(format!("{} weights for {n} rows", d0.len())));
        }
        let m0 = gram_product(&a, d0)?;
        let (tau, h, work) = match cfg.mode {
            Mode::L2 => (vec![1.0; n], d0.as_slice().to_vec(), 0),
            Mode::Sigma | Mode::Churn => {
                let boot = exact_factorize(&m0)?;
                let lcfg = cfg.leverage();
                let est = estimate_leverage(&a, d0, &boot, &lcfg, derive(cfg.seed, &[0x7a0, 0]))?;
                let gamma = cfg.gamma(a.ncols());
                let mut rng = rng_from(cfg.seed, &[0x5e, 0]);
                let h = (0..n).map(|i| draw(&mut rng, d0[i], est.tau[i], gamma)).collect();
                (est.tau, h, (est.probes * a.nnz()) as u64)
            }
        };
        let inner = SplitMaintainerState::new(a.clone(), &WeightVector::new(h.clone())?, split_config(&cfg, 0))?;
        let k_cur = inner.approx_inverse();
        let kept = h.iter().filter(|&&x| x > 0.0).count();
        let mut s = MaintenanceSession {
            d_cur: d0.as_slice().to_vec(),
            d_old: d0.as_slice().to_vec(),
            sigma_old: tau.clone(),
            tau,
            h,
            inner,
            k_cur,
            round: 0,
            since_restart: 0,
            restarts: 0,
            generation: Generation::new(),
            stats: vec![RoundStats { round: 0, resampled: kept, kept_rows: kept, work_units: work, restarted: false }],
            last_resampled: Vec::new(),
            a,
            cfg,
        };
        let handle = s.issue(m0)?;
        Ok((s, handle))
    }

    pub fn matrix(&self) -> &Arc<ConstraintMatrix> {
        &self.a
    }

    pub fn config(&self) -> &StabilityConfig {
        &self.cfg
    }

    pub fn round_index(&self) -> usize {
        self.round
    }

    pub fn weights(&self) -> &[f64] {
        &self.d_cur
    }

    /// Current sampled weights h.
    pub fn sparsifier_weights(&self) -> &[f64] {
        &self.h
    }

    /// Latest leverage score estimates.
    pub fn leverage(&self) -> &[f64] {
        &self.tau
    }

    pub fn restarts(&self) -> usize {
        self.restarts
    }

    pub fn generation(&self) -> &Generation {
        &self.generation
    }

    /// Coordinates re-drawn in the last round, in increasing order.
    pub fn last_resampled(&self) -> &[usize] {
        &self.last_resampled
    }

    /// Per-round statistics; entry 0 describes the initial sample.
    pub fn stats(&self) -> &[RoundStats] {
        &self.stats
    }

    /// Coordinates re-drawn after the initial sample.
    pub fn total_resampled(&self) -> usize {
        self.stats.iter().skip(1).map(|s| s.resampled).sum()
    }

    /// `round,resampled,kept_rows,work_units` lines.
    pub fn telemetry_report(&self) -> String {
        let mut out = String::from("round,resampled,kept_rows,work_units\n");
        for s in &self.stats {
            let _ = writeln!(out, "{},{},{},{}", s.round, s.resampled, s.kept_rows, s.work_units);
        }
        out
    }

    /// Current approximate inverse of A^T H A.
    pub fn approx_inverse(&self) -> Arc<SplitInverse> {
        self.k_cur.clone()
    }

    /// Move to weights `d_k` under the configured stability assumption.
    pub fn round(&mut self, d_k: &WeightVector) -> Result<SolverHandle> {
        if d_k.len() != self.a.nrows() {
            return Err(Error::DimensionMismatch(format!("{} weights for {} rows", d_k.len(), self.a.nrows())));
        }
        let check = match self.cfg.mode {
            Mode::L2 => Check::L2,
            _ => Check::Sigma,
        };
        self.step(d_k.as_slice().to_vec(), check)
    }

    /// Reach `d_k` through geometric intermediate points, each a valid
    /// round, when the direct step violates the stability bound.
    pub fn round_split(&mut self, d_k: &WeightVector) -> Result<SolverHandle> {
        let delta = log_change(&self.d_cur, d_k.as_slice())?;
        let inf = delta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let norm = match self.cfg.mode {
            Mode::L2 => weighted_norm(&delta, &vec![1.0; delta.len()]),
            _ => weighted_norm(&delta, &self.tau).max(inf),
        };
        let parts = ((norm / (0.9 * STABILITY_BOUND)).ceil() as usize).max(1);
        let start: Vec<f64> = self.d_cur.iter().map(|x| x.ln()).collect();
        let mut handle = None;
        for p in 1..=parts {
            let t = p as f64 / parts as f64;
            let w: Vec<f64> = if p == parts {
                d_k.as_slice().to_vec()
            } else {
                start.iter().zip(&delta).map(|(s, dl)| (s + t * dl).exp()).collect()
            };
            handle = Some(self.round(&WeightVector::new(w)?)?);
        }
        Ok(handle.expect("at least one part"))
    }

    /// A round that inserts the rows `added` (appended after the current
    /// rows, so `d_k` has length n + added.len()) and removes the rows in
    /// `removed` (whose entries of `d_k` must be zero). Other coordinates
    /// may also change, subject to the usual stability bound.
    pub fn round_churn(
        &mut self,
        d_k: &WeightVector,
        added: &[Vec<(usize, f64)>],
        removed: &[usize],
    ) -> Result<SolverHandle> {
        let n = self.a.nrows();
        if added.is_empty() && removed.is_empty() {
            return self.round(d_k);
        }
        let changes = added.len() + removed.len();
        if changes > self.cfg.churn_k {
            return Err(Error::ChurnBudgetExceeded { changes, budget: self.cfg.churn_k });
        }
        if d_k.len() != n + added.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} weights for {} rows after insertion",
                d_k.len(),
                n + added.len()
            )));
        }
        for &r in removed {
            if r >= n || d_k[r] != 0.0 || self.d_cur[r] == 0.0 {
                return Err(Error::InvalidArgument(format!("row {r} cannot be removed")));
            }
        }
        for j in n..d_k.len() {
            if !(d_k[j] > 0.0) {
                return Err(Error::InvalidArgument(format!("inserted row {j} needs positive weight")));
            }
        }
        let target = d_k.as_slice();
        let mut handle = None;

        // Plain part: every coordinate other than the churned rows.
        let mut plain = self.d_cur.clone();
        let mut touched = false;
        for i in 0..n {
            if !removed.contains(&i) && self.d_cur[i] > 0.0 && plain[i] != target[i] {
                plain[i] = target[i];
                touched = true;
            }
        }
        if touched {
            handle = Some(self.step_checked_subset(plain)?);
        }

        if !added.is_empty() {
            let a = Arc::new(self.a.with_rows_appended(added)?);
            self.extend(a)?;
        }
        let steps = (self.a.nrows() as f64).log2().ceil() as i32 + 1;
        if !added.is_empty() {
            for j in (0..=steps).rev() {
                let alpha = 0.5f64.powi(j);
                let mut w = self.d_cur.clone();
                for i in n..w.len() {
                    w[i] = alpha * target[i];
                }
                handle = Some(self.step(w, Check::None)?);
            }
        }
        if !removed.is_empty() {
            let base = self.d_cur.clone();
            for j in 1..=steps + 1 {
                let keep = if j == steps + 1 { 0.0 } else { 0.5f64.powi(j) };
                let mut w = self.d_cur.clone();
                for &r in removed {
                    w[r] = keep * base[r];
                }
                handle = Some(self.step(w, Check::None)?);
            }
        }
        Ok(handle.expect("churn round performs at least one step"))
    }

    /// Stability check restricted to rows with positive weight.
    fn step_checked_subset(&mut self, w: Vec<f64>) -> Result<SolverHandle> {
        let idx: Vec<usize> = (0..w.len()).filter(|&i| self.d_cur[i] > 0.0).collect();
        let p: Vec<f64> = idx.iter().map(|&i| self.d_cur[i]).collect();
        let q: Vec<f64> = idx.iter().map(|&i| w[i]).collect();
        let t: Vec<f64> = idx.iter().map(|&i| self.tau[i]).collect();
        check_sigma(&p, &q, &t)?;
        self.step(w, Check::None)
    }

    fn extend(&mut self, a: Arc<ConstraintMatrix>) -> Result<()> {
        let m = a.nrows();
        self.inner.extend_rows(a.clone())?;
        self.a = a;
        self.d_cur.resize(m, 0.0);
        self.d_old.resize(m, 0.0);
        self.sigma_old.resize(m, 0.0);
        self.tau.resize(m, 1e-12);
        self.h.resize(m, 0.0);
        Ok(())
    }

    fn step(&mut self, d_k: Vec<f64>, check: Check) -> Result<SolverHandle> {
        match check {
            Check::L2 => check_l2(&self.d_cur, &d_k)?,
            Check::Sigma => check_sigma(&self.d_cur, &d_k, &self.tau)?,
            Check::None => {}
        }
        let wk = WeightVector::new(d_k)?;
        let m_k = gram_product(&self.a, &wk)?;
        let round = self.round + 1;
        let (lo, hi) = self.cfg.thresholds;
        let in_band = |x: f64, old: f64| x >= lo * old && x <= hi * old && (old > 0.0 || x == 0.0);
        let mut work = 0u64;

        let (tau, h, resampled) = match self.cfg.mode {
            Mode::L2 => {
                let mut d_old = self.d_old.clone();
                let mut redrawn = Vec::new();
                for (i, old) in d_old.iter_mut().enumerate() {
                    if !in_band(wk[i], *old) {
                        *old = wk[i];
                        redrawn.push(i);
                    }
                }
                (self.tau.clone(), d_old, redrawn)
            }
            Mode::Sigma | Mode::Churn => {
                let boot = self.bootstrap(&m_k, round)?;
                let lcfg = self.cfg.leverage();
                let est = estimate_leverage(&self.a, &wk, &boot, &lcfg, derive(self.cfg.seed, &[0x7a0, round as u64]))?;
                work += (est.probes * self.a.nnz()) as u64;
                let gamma = self.cfg.gamma(self.a.ncols());
                let mut rng = rng_from(self.cfg.seed, &[0x5e, round as u64]);
                let mut h = self.h.clone();
                let mut redrawn = Vec::new();
                for i in 0..h.len() {
                    let stale_sigma = wk[i] > 0.0 && !in_band(est.tau[i], self.sigma_old[i]);
                    if !in_band(wk[i], self.d_old[i]) || stale_sigma {
                        h[i] = draw(&mut rng, wk[i], est.tau[i], gamma);
                        redrawn.push(i);
                    }
                }
                (est.tau, h, redrawn)
            }
        };

        let hv = WeightVector::new(h.clone())?;
        let d = self.a.ncols();
        let r = self.since_restart + 1;
        let budget = self.cfg.budget.unwrap_or_else(|| d.max(4 * r * r));
        self.inner.set_budget(budget);
        let (k_new, restarted) = match self.inner.update(&hv) {
            Ok(k) => {
                work += self.inner.last_work();
                (Some(k), false)
            }
            Err(Error::BudgetExceeded { .. } | Error::DriftViolation { .. }) => (None, true),
            Err(e) => return Err(e),
        };
        let k_new = match k_new {
            Some(k) => k,
            None => {
                self.inner = SplitMaintainerState::new(self.a.clone(), &hv, split_config(&self.cfg, round))?;
                let a = &self.a;
                work += (a.nnz() * d + a.nrows() * d * d) as u64;
                self.inner.approx_inverse()
            }
        };

        // Commit.
        for &i in &resampled {
            self.d_old[i] = wk[i];
            self.sigma_old[i] = tau[i];
        }
        self.d_cur = wk.into_vec();
        self.tau = tau;
        self.h = h;
        self.k_cur = k_new;
        self.round = round;
        if restarted {
            self.restarts += 1;
            self.since_restart = 0;
        } else {
            self.since_restart += 1;
        }
        let kept = self.h.iter().filter(|&&x| x > 0.0).count();
        self.stats.push(RoundStats { round, resampled: resampled.len(), kept_rows: kept, work_units: work, restarted });
        self.last_resampled = resampled;
        self.issue(m_k)
    }

    /// Solver for the new matrix preconditioned by the previous inverse.
    fn bootstrap(&self, m_k: &PdMatrix, round: usize) -> Result<SolverHandle> {
        let m_op: Arc<dyn LinearOp> = Arc::new(DenseOp(m_k.matrix().clone()));
        let opts =
            RichardsonOptions { seed: derive(self.cfg.seed, &[0xb00, round as u64]), ..RichardsonOptions::default() };
        richardson_solver(m_op, self.k_cur.clone(), opts)
    }

    fn issue(&mut self, m_k: PdMatrix) -> Result<SolverHandle> {
        let m_op: Arc<dyn LinearOp> = Arc::new(DenseOp(m_k.into_matrix()));
        let opts = RichardsonOptions {
            seed: derive(self.cfg.seed, &[0x155, self.round as u64]),
            provenance: Provenance::Maintained,
            ..RichardsonOptions::default()
        };
        let h = richardson_solver(m_op, self.k_cur.clone(), opts)?;
        self.generation.advance();
        Ok(h.guarded(&self.generation))
    }
}

fn split_config(cfg: &StabilityConfig, round: usize) -> SplitConfig {
    SplitConfig {
        beta: cfg.beta,
        compression: cfg.compression,
        seed: derive(cfg.seed, &[0x5b1, round as u64]),
        ..SplitConfig::default()
    }
}

/// d / p with probability p = min(1, gamma tau), else 0.
fn draw<R: Rng>(rng: &mut R, d: f64, tau: f64, gamma: f64) -> f64 {
    let u: f64 = rng.random();
    if d <= 0.0 {
        return 0.0;
    }
    let p = (gamma * tau).min(1.0);
    if u < p {
        d / p
    } else {
        0.0
    }
}
