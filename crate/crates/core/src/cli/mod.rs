//! Command line front end: `solve-lp`, `regress`, `round`,
//! `bench-maintenance` and `validate`.
//!
//! Exit codes: 0 success, 1 usage, parse or input errors, 2 infeasible
//! start, 3 iteration limit, 4 failed validation suites.

mod validate;

use crate::error::Error;
use crate::lp::{
    analytic_center, equality_residual, l1_regress, linf_regress, read_lp, rounding_ellipsoid, solve_lp, CenterConfig,
    IpmConfig, RoundingWeights,
};
use crate::maintenance::synthetic::{sparse_instance, SigmaDrift};
use crate::maintenance::{MaintenanceSession, Mode, StabilityConfig};
use crate::matrix::io::{parse_vector, read_constraint_matrix};
use crate::matrix::WeightVector;
use crate::rng::{rng_from, Gaussian};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub use validate::{Bundle, SUITES};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INPUT: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_ITERATION_LIMIT: i32 = 3;
pub const EXIT_VALIDATE: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "invmaint", version, about = "Maintained inverse solvers for LPs and regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve min c^T x, A x = b, l <= x <= u from an LP text file.
    SolveLp {
        input: PathBuf,
        /// Stop with exit code 3 after this many barrier steps.
        #[arg(long)]
        max_iterations: Option<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// l1 or l-infinity regression min ||A x - c|| for a Matrix Market A.
    Regress {
        matrix: PathBuf,
        rhs: PathBuf,
        #[arg(long, value_enum, default_value_t = Norm::L1)]
        norm: Norm,
        #[command(flatten)]
        common: Common,
    },
    /// Analytic center and rounding ellipsoids of {x : A x >= b}.
    Round {
        matrix: PathBuf,
        rhs: PathBuf,
        #[arg(long, value_enum, default_value_t = Weighting::Uniform)]
        weights: Weighting,
        /// Fixed point iterations for the Lewis weights.
        #[arg(long, default_value_t = 20)]
        lewis_iterations: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Drive a maintenance session along synthetic drift and report telemetry.
    BenchMaintenance {
        #[arg(long, default_value_t = 2000)]
        n: usize,
        #[arg(long, default_value_t = 20)]
        d: usize,
        /// Number of rounds.
        #[arg(long, short = 'r', default_value_t = 100)]
        rounds: usize,
        /// Nonzeros per row of the synthetic matrix.
        #[arg(long, default_value_t = 4)]
        per_row: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Run the invariant suites on the bundled instances.
    Validate {
        /// Directory holding matrix.mtx, weights.txt, lp.txt, flow.dimacs and expected.txt.
        #[arg(long)]
        bundle: Option<PathBuf>,
        /// Run only these suites.
        #[arg(long, value_delimiter = ',')]
        suite: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Target accuracy, in (0, 0.5].
    #[arg(long, default_value_t = 1e-6, value_parser = parse_eps)]
    eps: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Stability regime of the maintenance session.
    #[arg(long, value_enum, default_value_t = ModeArg::Sigma)]
    mode: ModeArg,
    /// Oversampling factor of the leverage score sampling.
    #[arg(long, value_parser = parse_positive)]
    gamma: Option<f64>,
    /// Sampling constant of the sparsifier.
    #[arg(long = "c-s", value_parser = parse_positive)]
    c_s: Option<f64>,
    /// Weight drift factor tolerated by the low-rank maintainer, at least 1.
    #[arg(long, value_parser = parse_beta)]
    beta: Option<f64>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ModeArg {
    L2,
    Sigma,
    Churn,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Norm {
    L1,
    Linf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Weighting {
    Uniform,
    Lewis,
}

fn parse_f64(s: &str) -> Result<f64, String> {
    let v: f64 = s.trim().parse().map_err(|_| format!("'{s}' is not a number"))?;
    if !v.is_finite() {
        return Err(format!("'{s}' is not finite"));
    }
    Ok(v)
}

fn parse_eps(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if !(v > 0.0 && v <= 0.5) {
        return Err(format!("eps must lie in (0, 0.5], got {v}"));
    }
    Ok(v)
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v <= 0.0 {
        return Err(format!("expected a positive value, got {v}"));
    }
    Ok(v)
}

fn parse_beta(s: &str) -> Result<f64, String> {
    let v = parse_f64(s)?;
    if v < 1.0 {
        return Err(format!("beta must be at least 1, got {v}"));
    }
    Ok(v)
}

impl Common {
    fn session(&self) -> StabilityConfig {
        let mut cfg = StabilityConfig {
            mode: match self.mode {
                ModeArg::L2 => Mode::L2,
                ModeArg::Sigma => Mode::Sigma,
                ModeArg::Churn => Mode::Churn,
            },
            gamma: self.gamma,
            seed: self.seed,
            ..StabilityConfig::default()
        };
        if let Some(c) = self.c_s {
            cfg.c_s = c;
        }
        if let Some(b) = self.beta {
            cfg.beta = b;
        }
        cfg
    }

    fn mode_name(&self) -> &'static str {
        match self.mode {
            ModeArg::L2 => "l2",
            ModeArg::Sigma => "sigma",
            ModeArg::Churn => "churn",
        }
    }

    fn header(&self, command: &str) -> String {
        let mut h = format!("# invmaint {command} seed={} eps={} mode={}", self.seed, self.eps, self.mode_name());
        if let Some(g) = self.gamma {
            let _ = write!(h, " gamma={g}");
        }
        if let Some(c) = self.c_s {
            let _ = write!(h, " c_s={c}");
        }
        if let Some(b) = self.beta {
            let _ = write!(h, " beta={b}");
        }
        h.push('\n');
        h
    }

    fn emit(&self, text: &str, out: &mut dyn Write) -> Result<(), Error> {
        match &self.out {
            Some(p) => std::fs::write(p, text)?,
            None => out.write_all(text.as_bytes())?,
        }
        Ok(())
    }
}

/// Exit code for a library error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) => EXIT_INFEASIBLE,
        Error::IterationLimit(_) => EXIT_ITERATION_LIMIT,
        _ => EXIT_INPUT,
    }
}

fn read_text(p: &Path) -> Result<String, Error> {
    std::fs::read_to_string(p).map_err(|e| Error::Io(format!("{}: {e}", p.display())))
}

fn push_vector(s: &mut String, name: &str, v: &[f64]) {
    s.push_str(name);
    for x in v {
        let _ = write!(s, " {x}");
    }
    s.push('\n');
}

fn cmd_solve_lp(input: &Path, max_iterations: Option<usize>, common: &Common) -> Result<String, Error> {
    let p = read_lp(input).map_err(|e| match e {
        Error::Io(m) => Error::Io(format!("{}: {m}", input.display())),
        other => other,
    })?;
    let cfg = IpmConfig { session: common.session(), max_iterations, ..IpmConfig::default() };
    let sol = solve_lp(&p, common.eps, &cfg)?;
    let st = &sol.stats;
    let mut s = common.header("solve-lp");
    let _ = writeln!(s, "# d={} n={}", p.d(), p.n());
    let _ = writeln!(s, "objective {}", st.objective);
    let _ = writeln!(s, "residual {}", equality_residual(&p, &sol.y));
    let _ = writeln!(s, "iterations {}", st.iterations);
    let _ = writeln!(s, "halvings {}", st.halvings);
    let _ = writeln!(s, "resampled {}", st.resampled);
    let _ = writeln!(s, "restarts {}", st.restarts);
    push_vector(&mut s, "y", sol.y.as_slice());
    Ok(s)
}

fn cmd_regress(matrix: &Path, rhs: &Path, norm: Norm, common: &Common) -> Result<String, Error> {
    let a = read_constraint_matrix(&read_text(matrix)?)?.to_dense();
    let c = nalgebra::DVector::from_vec(parse_vector(&read_text(rhs)?)?);
    if c.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!("{} values for {} rows", c.len(), a.nrows())));
    }
    let cfg = IpmConfig { session: common.session(), ..IpmConfig::default() };
    let (x, value, name) = match norm {
        Norm::L1 => {
            let x = l1_regress(&a, &c, common.eps, &cfg)?;
            let v = (&a * &x - &c).iter().map(|r| r.abs()).sum::<f64>();
            (x, v, "l1")
        }
        Norm::Linf => {
            let x = linf_regress(&a, &c, common.eps, &cfg)?;
            let v = (&a * &x - &c).amax();
            (x, v, "linf")
        }
    };
    let mut s = common.header("regress");
    let _ = writeln!(s, "# n={} d={} norm={name}", a.nrows(), a.ncols());
    let _ = writeln!(s, "value {value}");
    push_vector(&mut s, "x", x.as_slice());
    Ok(s)
}

fn cmd_round(matrix: &Path, rhs: &Path, w: Weighting, lewis: usize, common: &Common) -> Result<String, Error> {
    let a = read_constraint_matrix(&read_text(matrix)?)?.to_dense();
    let b = nalgebra::DVector::from_vec(parse_vector(&read_text(rhs)?)?);
    if b.len() != a.nrows() {
        return Err(Error::DimensionMismatch(format!("{} values for {} rows", b.len(), a.nrows())));
    }
    let cfg = CenterConfig { session: common.session(), ..CenterConfig::default() };
    let weights = match w {
        Weighting::Uniform => RoundingWeights::Uniform,
        Weighting::Lewis => RoundingWeights::Lewis { iterations: lewis },
    };
    let center = analytic_center(&a, &b, &WeightVector::ones(a.nrows()), None, &cfg)?;
    let r = rounding_ellipsoid(&a, &b, weights, Some(&center.x), &cfg)?;
    let mut s = common.header("round");
    let name = match w {
        Weighting::Uniform => "uniform",
        Weighting::Lewis => "lewis",
    };
    let _ = writeln!(s, "# n={} d={} weights={name}", a.nrows(), a.ncols());
    let _ = writeln!(s, "inner_scale {}", r.inner_scale);
    let _ = writeln!(s, "outer_scale {}", r.outer_scale);
    let _ = writeln!(s, "ratio {}", r.outer_scale / r.inner_scale);
    push_vector(&mut s, "center", r.center.as_slice());
    for i in 0..r.shape.nrows() {
        let row: Vec<f64> = r.shape.row(i).iter().copied().collect();
        push_vector(&mut s, "shape", &row);
    }
    Ok(s)
}

fn l2_step(g: &mut Gaussian<crate::rng::SeededRng>, log_d: &mut [f64]) -> Result<WeightVector, Error> {
    let mut v = vec![0.0; log_d.len()];
    g.fill(&mut v);
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    for (l, x) in log_d.iter_mut().zip(&v) {
        *l += 0.09 * x / norm;
    }
    WeightVector::new(log_d.iter().map(|l| l.exp()).collect())
}

/// The benchmark report: a header naming every parameter, one
/// `round,resampled,kept_rows,work_units` line per round and the totals.
pub fn bench_report(n: usize, d: usize, rounds: usize, per_row: usize, cfg: StabilityConfig) -> Result<String, Error> {
    let seed = cfg.seed;
    let mode = cfg.mode;
    let a = Arc::new(sparse_instance(n, d, per_row, seed)?);
    let (mut session, _) = MaintenanceSession::new(a.clone(), &WeightVector::ones(n), cfg)?;
    let mut drift = SigmaDrift::new(a, seed);
    let mut g = Gaussian::new(rng_from(seed, &[0xbe7c]));
    let mut log_d = vec![0.0; n];
    for _ in 0..rounds {
        let w = match mode {
            Mode::L2 => l2_step(&mut g, &mut log_d)?,
            _ => drift.next_weights()?,
        };
        session.round(&w)?;
    }
    let name = match mode {
        Mode::L2 => "l2",
        Mode::Sigma => "sigma",
        Mode::Churn => "churn",
    };
    let mut s = format!("# bench-maintenance n={n} d={d} rounds={rounds} per_row={per_row} seed={seed} mode={name}\n");
    let _ = writeln!(s, "# initial_kept={}", session.stats()[0].kept_rows);
    // skip the entry for the initial sample
    for line in session.telemetry_report().lines().enumerate().filter(|(i, _)| *i != 1).map(|(_, l)| l) {
        s.push_str(line);
        s.push('\n');
    }
    let _ = writeln!(s, "total_resampled={}", session.total_resampled());
    let _ = writeln!(s, "restarts={}", session.restarts());
    Ok(s)
}

/// Parse `args` (including the program name) and run the command. The
/// report goes to `--out` when given and to `out` otherwise.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    let (common, result) = match &cli.command {
        Command::SolveLp { input, max_iterations, common } => (common, cmd_solve_lp(input, *max_iterations, common)),
        Command::Regress { matrix, rhs, norm, common } => (common, cmd_regress(matrix, rhs, *norm, common)),
        Command::Round { matrix, rhs, weights, lewis_iterations, common } => {
            (common, cmd_round(matrix, rhs, *weights, *lewis_iterations, common))
        }
        Command::BenchMaintenance { n, d, rounds, per_row, common } => {
            (common, bench_report(*n, *d, *rounds, *per_row, common.session()))
        }
        Command::Validate { bundle, suite, common } => {
            return validate::cmd_validate(bundle.as_deref(), suite, common, out, err);
        }
    };
    match result.and_then(|text| common.emit(&text, out)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}
