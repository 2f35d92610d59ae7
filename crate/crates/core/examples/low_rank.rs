//! Exact low-rank inverse maintenance next to the split maintainer on a run
//! of weight changes that also brings in new rows.
//!
//!     cargo run --release --example low_rank

use invmaint::low_rank::{ExplicitInverseState, SplitConfig, SplitMaintainerState};
use invmaint::matrix::{gram_product, ConstraintMatrix, WeightVector};
use invmaint::rng::{rng_from, Gaussian};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

fn main() -> invmaint::Result<()> {
    let (n, d, rounds) = (300, 12, 10);
    let mut g = Gaussian::new(rng_from(5, &[0]));
    let mut buf = vec![0.0; n * d];
    g.fill(&mut buf);
    let a = Arc::new(ConstraintMatrix::from_dense(&DMatrix::from_vec(n, d, buf))?);

    // rows 280.. start switched off and enter one per round
    let mut w: Vec<f64> = (0..n).map(|i| if i < 280 { 1.0 } else { 0.0 }).collect();
    let d0 = WeightVector::new(w.clone())?;
    let mut explicit = ExplicitInverseState::new(a.clone(), &d0, 4 * rounds)?;
    let cfg = SplitConfig { beta: 10.0, ..SplitConfig::default() };
    let mut split = SplitMaintainerState::new(a.clone(), &d0, cfg)?;
    let b = DVector::from_element(d, 1.0);
    println!("round  changed  explicit_err  split_err");
    for k in 0..rounds {
        w[280 + k] = 1.0;
        w[3 * k] *= 2.0;
        let wk = WeightVector::new(w.clone())?;
        let (he, hs) = (explicit.round(&wk)?, split.round(&wk)?);
        let m = gram_product(&a, &wk)?.into_matrix();
        let x = m.clone().cholesky().expect("pd").solve(&b);
        let err = |y: DVector<f64>| {
            let e = &y - &x;
            (e.dot(&(&m * &e)) / x.dot(&(&m * &x))).sqrt()
        };
        println!(
            "{k:>5}  {:>7}  {:>12.2e}  {:>9.2e}",
            explicit.inverse().support_size(),
            err(he.solve(&b, 1e-6)?),
            err(hs.solve(&b, 1e-6)?)
        );
    }
    println!("explicit work {}", explicit.telemetry().total("work"));
    Ok(())
}
