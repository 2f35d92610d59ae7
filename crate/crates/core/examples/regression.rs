//! l1 and l-infinity regression on a noisy line fit with a few outliers.
//!
//!     cargo run --release --example regression

use invmaint::lp::{l1_regress, linf_regress, IpmConfig};
use nalgebra::{DMatrix, DVector};

fn main() -> invmaint::Result<()> {
    let n = 40;
    let t: Vec<f64> = (0..n).map(|i| i as f64 / (n - 1) as f64).collect();
    let a = DMatrix::from_fn(n, 2, |i, j| if j == 0 { 1.0 } else { t[i] });
    // y = 1 + 2t plus a small wiggle, with three gross outliers
    let mut c = DVector::from_fn(n, |i, _| 1.0 + 2.0 * t[i] + 0.01 * (7.0 * i as f64).sin());
    for i in [5, 17, 31] {
        c[i] += 5.0;
    }
    let cfg = IpmConfig::default();
    let x1 = l1_regress(&a, &c, 1e-6, &cfg)?;
    let xi = linf_regress(&a, &c, 1e-6, &cfg)?;
    let ls = a.clone().svd(true, true).solve(&c, 1e-12).expect("least squares");
    for (name, x) in [("l1", &x1), ("linf", &xi), ("l2", &ls)] {
        let r = &a * x - &c;
        println!(
            "{name:>4}: intercept {:.4} slope {:.4}  ||r||_1 {:.4}  ||r||_inf {:.4}",
            x[0],
            x[1],
            r.abs().sum(),
            r.amax()
        );
    }
    Ok(())
}
