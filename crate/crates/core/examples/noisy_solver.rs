//! Draws from the noisy solver next to the ideal Gaussian law it targets.
//!
//!     cargo run --release --example noisy_solver

use invmaint::matrix::{ConstraintMatrix, PdMatrix};
use invmaint::noisy::{ideal_solve, noisy_solver};
use invmaint::rng::{rng_from, Gaussian};
use invmaint::solver::exact_factorize;
use invmaint::stats::{covariance, energy_block_test, mean};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

fn main() -> invmaint::Result<()> {
    let (n, d, eps, draws) = (20, 4, 0.25, 5000);
    let mut g = Gaussian::new(rng_from(1, &[0]));
    let mut buf = vec![0.0; n * d];
    g.fill(&mut buf);
    let dense = DMatrix::from_vec(n, d, buf);
    let m = PdMatrix::new(dense.tr_mul(&dense))?;
    let a = Arc::new(ConstraintMatrix::from_dense(&dense)?);
    let h = noisy_solver(exact_factorize(&m)?, a, 7)?;
    let b = DVector::from_element(d, 1.0);

    let x: Vec<_> = (0..draws).map(|_| h.solve(&b, eps)).collect::<invmaint::Result<_>>()?;
    let y: Vec<_> = (0..draws as u64).map(|s| ideal_solve(&m, n, &b, eps, s)).collect::<invmaint::Result<_>>()?;
    let exact = m.matrix().clone().cholesky().expect("pd").solve(&b);
    let show = |v: DVector<f64>| v.iter().map(|x| format!("{x:>10.3e}")).collect::<String>();
    println!("M^-1 b             {}", show(exact));
    println!("noisy mean         {}", show(mean(&x)));
    println!("ideal mean         {}", show(mean(&y)));
    println!("noisy cov diagonal {}", show(covariance(&x).diagonal()));
    println!("ideal cov diagonal {}", show(covariance(&y).diagonal()));
    let t = energy_block_test(&x, &y, 50);
    println!("energy test z = {:.2} (rejects at 0.1%: {})", t.z, t.rejects(3.090232));
    Ok(())
}
