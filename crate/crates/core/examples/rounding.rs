//! Analytic center and rounding ellipsoids of a random polytope, with both
//! weightings, checked against sampled boundary points.
//!
//!     cargo run --release --example rounding -- 3 30

use invmaint::lp::{rounding_ellipsoid, CenterConfig, RoundingWeights};
use invmaint::rng::{rng_from, Gaussian};
use nalgebra::{DMatrix, DVector};

fn main() -> invmaint::Result<()> {
    let args: Vec<usize> = std::env::args().skip(1).map(|s| s.parse().expect("integer")).collect();
    let (d, n) = match args[..] {
        [d, n] => (d, n),
        _ => (3, 30),
    };
    // facets a_i^T x >= -1 with random unit normals; contains the origin
    let mut g = Gaussian::new(rng_from(3, &[0]));
    let mut a = DMatrix::zeros(n, d);
    for i in 0..n {
        let mut row = vec![0.0; d];
        g.fill(&mut row);
        let norm = row.iter().map(|v| v * v).sum::<f64>().sqrt();
        for j in 0..d {
            a[(i, j)] = row[j] / norm;
        }
    }
    let b = DVector::from_element(n, -1.0);
    for kind in [RoundingWeights::Uniform, RoundingWeights::Lewis { iterations: 20 }] {
        let e = rounding_ellipsoid(&a, &b, kind, None, &CenterConfig::default())?;
        // walk from the center along random directions to the boundary
        let mut worst = 0.0f64;
        for _ in 0..2000 {
            let mut dir = vec![0.0; d];
            g.fill(&mut dir);
            let dir = DVector::from_vec(dir);
            let ad = &a * &dir;
            let slack = &a * &e.center - &b;
            let step = (0..n).filter(|&i| ad[i] < 0.0).map(|i| -slack[i] / ad[i]).fold(f64::INFINITY, f64::min);
            if step.is_finite() {
                worst = worst.max(e.norm(&(&e.center + &dir * step)));
            }
        }
        println!(
            "{kind:?}: inner {:.4} outer {:.4} ratio {:.2}; farthest sampled boundary point at {:.4}",
            e.inner_scale,
            e.outer_scale,
            e.outer_scale / e.inner_scale,
            worst
        );
    }
    Ok(())
}
