//! Leverage-score sampling with exact and estimated scores on a tall random
//! matrix, reporting kept rows and the spectral band of the result.
//!
//!     cargo run --release --example sparsifier -- 4000 20 0.5

use invmaint::matrix::{exact_leverage_scores, gram_product, spectral_close, ConstraintMatrix, WeightVector};
use invmaint::rng::{rng_from, Gaussian};
use invmaint::sketch::{estimate_leverage, sample_sparsifier, LeverageConfig};
use invmaint::solver::exact_factorize;
use nalgebra::DMatrix;

fn main() -> invmaint::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().map_or(4000, |s| s.parse().expect("n"));
    let d: usize = args.next().map_or(20, |s| s.parse().expect("d"));
    let eps: f64 = args.next().map_or(0.5, |s| s.parse().expect("eps"));
    let mut g = Gaussian::new(rng_from(2, &[0]));
    let mut buf = vec![0.0; n * d];
    g.fill(&mut buf);
    // a few heavy rows so the scores are far from uniform
    for i in 0..d {
        buf[i * n + i] *= 50.0;
    }
    let a = ConstraintMatrix::from_dense(&DMatrix::from_vec(n, d, buf))?;
    let w = WeightVector::ones(n);
    let full = gram_product(&a, &w)?;

    let sigma = exact_leverage_scores(&a, &w)?;
    let cfg = LeverageConfig { eps_tau: 0.1, ..LeverageConfig::default() };
    let est = estimate_leverage(&a, &w, &exact_factorize(&full)?, &cfg, 3)?;
    println!("{} probes for the estimate", est.probes);
    for (name, u) in [("exact", &sigma), ("estimated", &est.tau)] {
        let sp = sample_sparsifier(&a, &w, u, eps, 4, 4.0)?;
        let r = spectral_close(&sp.gram(&a)?, &full, eps)?;
        println!(
            "{name:>9}: kept {} of {n} rows, eigenvalues of the ratio in [{:.3}, {:.3}], within e^(+-{eps}): {}",
            sp.kept, r.lambda_min, r.lambda_max, r.close
        );
    }
    Ok(())
}
