//! Solve a box-constrained LP from a file (or a built-in instance) with the
//! path-following solver and print the solution and its statistics.
//!
//!     cargo run --release --example solve_lp -- tests/fixtures/tiny.lp 1e-6

use invmaint::lp::{equality_residual, read_lp, solve_lp, IpmConfig, LpProblem};
use nalgebra::{dmatrix, dvector};

fn main() -> invmaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let p = match args.next() {
        Some(path) => read_lp(path)?,
        // min -x1 subject to x1 + x2 = 1, 0 <= x <= 1
        None => LpProblem::from_dense(
            &dmatrix![1.0, 1.0],
            dvector![1.0],
            dvector![-1.0, 0.0],
            dvector![0.0, 0.0],
            dvector![1.0, 1.0],
            dvector![0.5, 0.5],
        )?,
    };
    let eps: f64 = args.next().map_or(1e-6, |s| s.parse().expect("eps"));
    let sol = solve_lp(&p, eps, &IpmConfig::default())?;
    println!("objective {:.9}", sol.stats.objective);
    println!("residual  {:.3e}", equality_residual(&p, &sol.y));
    println!("iterations {} (rejected steps {})", sol.stats.iterations, sol.stats.halvings);
    println!("resampled rows {} over {} restarts", sol.stats.resampled, sol.stats.restarts);
    let y: Vec<String> = sol.y.iter().map(|v| format!("{v:.6}")).collect();
    println!("y = {}", y.join(" "));
    Ok(())
}
