//! Preconditioned Richardson iteration with a Jacobi preconditioner, showing
//! the step count and achieved error at several accuracies.
//!
//!     cargo run --release --example richardson

use invmaint::rng::{rng_from, Gaussian};
use invmaint::solver::{resolve_l, richardson_solver, richardson_steps, DenseOp, RichardsonOptions};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

fn main() -> invmaint::Result<()> {
    let d = 30;
    let mut g = Gaussian::new(rng_from(4, &[0]));
    let mut buf = vec![0.0; 4 * d * d];
    g.fill(&mut buf);
    let a = DMatrix::from_vec(4 * d, d, buf);
    let scales = DMatrix::from_diagonal(&DVector::from_fn(d, |i, _| 1.0 + i as f64));
    let m = scales.transpose() * a.tr_mul(&a) * &scales;
    let pre = DMatrix::from_diagonal(&m.diagonal().map(|v| 1.0 / v));
    let (m_op, n_op) = (Arc::new(DenseOp(m.clone())), Arc::new(DenseOp(pre)));
    let opts = RichardsonOptions::default();
    let l = resolve_l(m_op.as_ref(), n_op.as_ref(), &opts)?;
    println!("L = {l:.2} from the power-iteration estimate");
    let h = richardson_solver(m_op, n_op, opts)?;
    let b = DVector::from_element(d, 1.0);
    let x = m.clone().cholesky().expect("pd").solve(&b);
    for eps in [0.1, 1e-4, 1e-8] {
        let y = h.solve(&b, eps)?;
        let e = &y - &x;
        let err = e.dot(&(&m * &e)) / x.dot(&(&m * &x));
        println!("eps {eps:.0e}: {} steps, relative M-norm^2 error {err:.2e}", richardson_steps(eps, l));
    }
    Ok(())
}
