//! Self checks over the bundled instances, one suite per module.

use super::{Common, EXIT_INPUT, EXIT_OK, EXIT_VALIDATE};
use crate::error::{Error, Result};
use crate::low_rank::{woodbury_inverse_apply, ExplicitInverseState};
use crate::lp::flow::{min_cost_flow, parse_dimacs};
use crate::lp::{parse_lp, solve_lp, IpmConfig};
use crate::maintenance::synthetic::{sparse_instance, SigmaDrift};
use crate::maintenance::{leverage_stability_check, MaintenanceSession};
use crate::matrix::io::{parse_weights, read_constraint_matrix, write_matrix_market};
use crate::matrix::{exact_leverage_scores, gram_product, spectral_close, ConstraintMatrix, PdMatrix, WeightVector};
use crate::noisy::noisy_solver;
use crate::rng::{rng_from, Gaussian, SeededRng};
use crate::sketch::{estimate_leverage, sample_sparsifier, LeverageConfig};
use crate::solver::{
    certify_solver, exact_factorize, richardson_solver, DenseOp, LinearOp, RichardsonOptions, SolverHandle,
};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

pub const SUITES: [&str; 7] =
    ["matrix_core", "solver_core", "sketching", "low_rank", "maintenance", "noisy", "lp_apps"];

const FILES: [&str; 5] = ["matrix.mtx", "weights.txt", "lp.txt", "flow.dimacs", "expected.txt"];

/// The text of the bundled instances.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub matrix: String,
    pub weights: String,
    pub lp: String,
    pub flow: String,
    pub expected: String,
}

impl Default for Bundle {
    fn default() -> Self {
        Bundle {
            matrix: include_str!("../../data/bundle/matrix.mtx").into(),
            weights: include_str!("../../data/bundle/weights.txt").into(),
            lp: include_str!("../../data/bundle/lp.txt").into(),
            flow: include_str!("../../data/bundle/flow.dimacs").into(),
            expected: include_str!("../../data/bundle/expected.txt").into(),
        }
    }
}

impl Bundle {
    pub fn load(dir: &Path) -> Result<Self> {
        let read = |name: &str| {
            let p = dir.join(name);
            std::fs::read_to_string(&p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
        };
        let t: Vec<String> = FILES.iter().map(|f| read(f)).collect::<Result<_>>()?;
        let [matrix, weights, lp, flow, expected] = <[String; 5]>::try_from(t).expect("five files");
        Ok(Bundle { matrix, weights, lp, flow, expected })
    }

    fn expected(&self) -> Result<HashMap<String, f64>> {
        let mut m = HashMap::new();
        for (i, raw) in self.expected.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let mut it = line.split_whitespace();
            let (Some(k), Some(v), None) = (it.next(), it.next(), it.next()) else {
                return Err(Error::Parse { line: i + 1, msg: "expected 'key value'".into() });
            };
            let v: f64 = v.parse().map_err(|_| Error::Parse { line: i + 1, msg: format!("bad value '{v}'") })?;
            m.insert(k.to_string(), v);
        }
        Ok(m)
    }
}

type Outcome = std::result::Result<String, String>;

fn fail(msg: impl Into<String>) -> Outcome {
    Err(msg.into())
}

fn lib(e: Error) -> String {
    e.to_string()
}

fn gaussian(rows: usize, cols: usize, g: &mut Gaussian<SeededRng>) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| g.sample())
}

fn gvec(n: usize, g: &mut Gaussian<SeededRng>) -> DVector<f64> {
    DVector::from_fn(n, |_, _| g.sample())
}

/// Largest ||S(b) - M^{-1} b||_M^2 / ||M^{-1} b||_M^2 over `trials` right-hand sides.
fn worst_error(
    h: &SolverHandle,
    m: &DMatrix<f64>,
    eps: f64,
    trials: usize,
    g: &mut Gaussian<SeededRng>,
) -> Result<f64> {
    let chol = m.clone().cholesky().ok_or_else(|| Error::NotPositiveDefinite("oracle".into()))?;
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let b = gvec(m.nrows(), g);
        let x = chol.solve(&b);
        let e = h.solve(&b, eps)? - &x;
        worst = worst.max(e.dot(&(m * &e)) / x.dot(&(m * &x)));
    }
    Ok(worst)
}

fn dense_gram(a: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(a.ncols(), a.ncols());
    for i in 0..a.nrows() {
        let r = a.row(i);
        m += r.transpose() * r * w[i];
    }
    m
}

fn matrix_core(b: &Bundle, _seed: u64) -> Outcome {
    let a = read_constraint_matrix(&b.matrix).map_err(lib)?;
    let w = parse_weights(&b.weights).map_err(lib)?;
    if w.len() != a.nrows() {
        return fail(format!("{} weights for {} rows", w.len(), a.nrows()));
    }
    let again = read_constraint_matrix(&write_matrix_market(&a)).map_err(lib)?;
    if again.to_dense() != a.to_dense() {
        return fail("Matrix Market round trip changed the matrix");
    }
    let g = gram_product(&a, &w).map_err(lib)?;
    let oracle = dense_gram(&a.to_dense(), w.as_slice());
    let gap = (g.matrix() - &oracle).amax();
    if gap > 1e-12 * oracle.amax() {
        return fail(format!("gram product differs from the dense sum by {gap:e}"));
    }
    let close = spectral_close(&g, &PdMatrix::new(oracle).map_err(lib)?, 1e-9).map_err(lib)?;
    if !close.close {
        return fail("gram product not spectrally equal to the dense sum");
    }
    Ok(format!("{}x{} nnz={}", a.nrows(), a.ncols(), a.nnz()))
}

fn solver_core(_b: &Bundle, seed: u64) -> Outcome {
    let mut g = Gaussian::new(rng_from(seed, &[0x5c]));
    let d = 8;
    let a = gaussian(40, d, &mut g);
    let m = a.tr_mul(&a);
    let pm = PdMatrix::new(m.clone()).map_err(lib)?;
    let exact = exact_factorize(&pm).map_err(lib)?;
    let m_op: Arc<dyn LinearOp> = Arc::new(DenseOp(m.clone()));
    let pre: Arc<dyn LinearOp> = Arc::new(DenseOp((&m * 1.5).try_inverse().ok_or("singular instance")?));
    let rich = richardson_solver(m_op, pre, RichardsonOptions { l: Some(2.0), seed, ..RichardsonOptions::default() })
        .map_err(lib)?;
    for (name, h) in [("exact", &exact), ("richardson", &rich)] {
        for eps in [0.5, 0.1, 1e-4] {
            let worst = worst_error(h, &m, eps, 20, &mut g).map_err(lib)?;
            if worst > eps {
                return fail(format!("{name} error {worst:e} above eps {eps}"));
            }
        }
    }
    let cert = certify_solver(&rich, &pm, 0.5, 10, seed).map_err(lib)?;
    if !cert.passed {
        return fail(format!("certification of the richardson solver failed (band {})", cert.band));
    }
    Ok("exact and richardson handles meet the contract".into())
}

fn sketching(_b: &Bundle, seed: u64) -> Outcome {
    let (n, d) = (600, 5);
    let a = sparse_instance(n, d, 3, seed).map_err(lib)?;
    let w = WeightVector::ones(n);
    let sigma = exact_leverage_scores(&a, &w).map_err(lib)?;
    let total: f64 = sigma.iter().sum();
    if (total - d as f64).abs() > 1e-8 {
        return fail(format!("leverage scores sum to {total}"));
    }
    let m = gram_product(&a, &w).map_err(lib)?;
    let cfg = LeverageConfig { eps_tau: 0.25, ..LeverageConfig::default() };
    let est = estimate_leverage(&a, &w, &exact_factorize(&m).map_err(lib)?, &cfg, seed).map_err(lib)?;
    let inside = est.tau.iter().zip(&sigma).filter(|(t, s)| **t >= 0.75 * **s && **t <= 1.25 * **s).count();
    if (inside as f64) < 0.98 * n as f64 {
        return fail(format!("only {inside}/{n} estimates within 25%"));
    }
    let sp = sample_sparsifier(&a, &w, &sigma, 0.5, seed, 4.0).map_err(lib)?;
    let ok = sp.gram(&a).is_ok_and(|h| spectral_close(&h, &m, 0.5).is_ok_and(|c| c.close));
    if !ok {
        return fail("sparsifier is not a 0.5 spectral approximation");
    }
    Ok(format!("kept {}/{n} rows", sp.kept))
}

fn low_rank(_b: &Bundle, seed: u64) -> Outcome {
    let mut g = Gaussian::new(rng_from(seed, &[0x10]));
    let (d, k) = (8, 3);
    let base = gaussian(20, d, &mut g);
    let a0 = base.tr_mul(&base);
    let inv = a0.clone().try_inverse().ok_or("singular instance")?;
    let u = gaussian(d, k, &mut g);
    let c = DMatrix::identity(k, k);
    let rhs = gvec(d, &mut g);
    let x = woodbury_inverse_apply(&DenseOp(inv), &u, &c, &u.transpose(), &rhs).map_err(lib)?;
    let oracle = (&a0 + &u * u.transpose()).try_inverse().ok_or("singular update")? * &rhs;
    if (&x - &oracle).norm() > 1e-9 * oracle.norm() {
        return fail("woodbury apply differs from dense inversion");
    }
    let n = 60;
    let dense = gaussian(n, 6, &mut g);
    let a = Arc::new(ConstraintMatrix::from_dense(&dense).map_err(lib)?);
    let mut st = ExplicitInverseState::new(a, &WeightVector::ones(n), 20).map_err(lib)?;
    let mut w = vec![1.0; n];
    for r in 0..8 {
        w[(r * 7) % n] *= 1.5;
        st.round(&WeightVector::new(w.clone()).map_err(lib)?).map_err(lib)?;
        let exact = dense_gram(&dense, &w).try_inverse().ok_or("singular round")?;
        if (st.inverse().to_dense() - &exact).amax() > 1e-8 * exact.amax() {
            return fail(format!("explicit inverse is off in round {r}"));
        }
    }
    Ok("woodbury and explicit maintenance match dense inverses".into())
}

fn maintenance(_b: &Bundle, seed: u64) -> Outcome {
    let (n, d) = (300, 8);
    let a = Arc::new(sparse_instance(n, d, 3, seed).map_err(lib)?);
    let dense = a.to_dense();
    let cfg = crate::maintenance::StabilityConfig { seed, ..Default::default() };
    let (mut s, _) = MaintenanceSession::new(a.clone(), &WeightVector::ones(n), cfg).map_err(lib)?;
    let mut drift = SigmaDrift::new(a.clone(), seed);
    let mut g = Gaussian::new(rng_from(seed, &[0x3a]));
    for r in 0..6 {
        let w = drift.next_weights().map_err(lib)?;
        let h = s.round(&w).map_err(lib)?;
        let worst = worst_error(&h, &dense_gram(&dense, w.as_slice()), 0.1, 20, &mut g).map_err(lib)?;
        if worst > 0.1 {
            return fail(format!("round {r}: error {worst:e} above 0.1"));
        }
    }
    for _ in 0..20 {
        let x: Vec<f64> = (0..n).map(|_| g.sample().exp()).collect();
        let y: Vec<f64> = x.iter().map(|v| v * (0.1 * g.sample().tanh()).exp()).collect();
        let rep =
            leverage_stability_check(&a, &WeightVector::new(x).map_err(lib)?, &WeightVector::new(y).map_err(lib)?)
                .map_err(lib)?;
        if !rep.holds() {
            return fail(format!("leverage continuity ratio {}", rep.ratio()));
        }
    }
    Ok(format!("6 rounds, {} rows resampled", s.total_resampled()))
}

fn noisy(_b: &Bundle, seed: u64) -> Outcome {
    let d = 4;
    let a = Arc::new(ConstraintMatrix::from_dense(&DMatrix::identity(d, d)).map_err(lib)?);
    let h = noisy_solver(exact_factorize(&PdMatrix::identity(d)).map_err(lib)?, a, seed).map_err(lib)?;
    let mut e1 = DVector::zeros(d);
    e1[0] = 1.0;
    let eps = 0.25;
    let var = eps / (64.0 * d as f64);
    let draws = 4000;
    let (mut mean, mut sq) = (DVector::zeros(d), DVector::zeros(d));
    for _ in 0..draws {
        let z = h.solve(&e1, eps).map_err(lib)? - &e1;
        mean += &z;
        sq += z.component_mul(&z);
    }
    let nf = draws as f64;
    for i in 0..d {
        let m = mean[i] / nf;
        let v = sq[i] / nf;
        if m.abs() > 4.0 * (var / nf).sqrt() || (v - var).abs() > 4.0 * var * (2.0 / nf).sqrt() {
            return fail(format!("coordinate {i}: mean {m:e}, variance {v:e} vs {var:e}"));
        }
    }
    Ok(format!("{draws} draws match the reference law"))
}

fn lp_apps(b: &Bundle, seed: u64) -> Outcome {
    let exp = b.expected().map_err(lib)?;
    let want = |k: &str| exp.get(k).copied().ok_or(format!("expected.txt lacks '{k}'"));
    let p = parse_lp(&b.lp).map_err(lib)?;
    let eps = 1e-6;
    let sol = solve_lp(&p, eps, &IpmConfig::default()).map_err(lib)?;
    let target = want("lp_objective")?;
    if (sol.stats.objective - target).abs() > 10.0 * eps {
        return fail(format!("lp objective {} vs {target}", sol.stats.objective));
    }
    let f = parse_dimacs(&b.flow).map_err(lib)?;
    let r = min_cost_flow(&f, seed, &IpmConfig::default()).map_err(lib)?;
    let (v, c) = (want("flow_value")?, want("flow_cost")?);
    if r.value as f64 != v || r.cost as f64 != c {
        return fail(format!("flow value {} cost {} vs {v} {c}", r.value, r.cost));
    }
    Ok(format!("objective {} flow {} at cost {}", sol.stats.objective, r.value, r.cost))
}

fn run_suite(name: &str, b: &Bundle, seed: u64) -> Outcome {
    match name {
        "matrix_core" => matrix_core(b, seed),
        "solver_core" => solver_core(b, seed),
        "sketching" => sketching(b, seed),
        "low_rank" => low_rank(b, seed),
        "maintenance" => maintenance(b, seed),
        "noisy" => noisy(b, seed),
        "lp_apps" => lp_apps(b, seed),
        _ => unreachable!("suite names are checked first"),
    }
}

/// Run each named suite (all when `names` is empty) and return one
/// `(suite, outcome)` pair per suite.
pub fn run_suites(b: &Bundle, names: &[String], seed: u64) -> Result<Vec<(String, Outcome)>> {
    let chosen: Vec<String> =
        if names.is_empty() { SUITES.iter().map(|s| s.to_string()).collect() } else { names.to_vec() };
    if let Some(bad) = chosen.iter().find(|s| !SUITES.contains(&s.as_str())) {
        return Err(Error::InvalidArgument(format!("unknown suite '{bad}' (known: {})", SUITES.join(", "))));
    }
    Ok(chosen
        .into_iter()
        .map(|s| {
            let r = run_suite(&s, b, seed);
            (s, r)
        })
        .collect())
}

pub(super) fn cmd_validate(
    bundle: Option<&Path>,
    names: &[String],
    common: &Common,
    out: &mut dyn Write,
    err: &mut dyn Write,
) -> i32 {
    let b = match bundle.map(Bundle::load).unwrap_or_else(|| Ok(Bundle::default())) {
        Ok(b) => b,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let results = match run_suites(&b, names, common.seed) {
        Ok(r) => r,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return EXIT_INPUT;
        }
    };
    let mut text = common.header("validate");
    let mut failed = Vec::new();
    for (name, r) in &results {
        match r {
            Ok(detail) => text.push_str(&format!("{name} PASS {detail}\n")),
            Err(why) => {
                text.push_str(&format!("{name} FAIL {why}\n"));
                failed.push(name.clone());
            }
        }
    }
    if let Err(e) = common.emit(&text, out) {
        let _ = writeln!(err, "error: {e}");
        return EXIT_INPUT;
    }
    if failed.is_empty() {
        EXIT_OK
    } else {
        let _ = writeln!(err, "failing suites: {}", failed.join(", "));
        EXIT_VALIDATE
    }
}
