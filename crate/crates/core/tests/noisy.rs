mod common;

use common::*;
use invmaint::matrix::*;
use invmaint::noisy::*;
use invmaint::rng::{rng_from, Gaussian};
use invmaint::solver::{exact_factorize, richardson_solver, DenseOp, LinearOp, RichardsonOptions, SolverHandle};
use invmaint::stats::energy_block_test;
use invmaint::Error;
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

// one-sided 0.1% critical value of the standard normal
const Z_999: f64 = 3.090232;

fn setup(n: usize, d: usize, seed: u64) -> (Arc<ConstraintMatrix>, DMatrix<f64>, SolverHandle) {
    let dense = gaussian_matrix(n, d, seed);
    let a = Arc::new(ConstraintMatrix::from_dense(&dense).unwrap());
    let m = dense.tr_mul(&dense);
    let base = exact_factorize(&PdMatrix::new(m.clone()).unwrap()).unwrap();
    (a, m, base)
}

fn samples(h: &SolverHandle, b: &DVector<f64>, eps: f64, count: usize) -> Vec<DVector<f64>> {
    (0..count).map(|_| h.solve(b, eps).unwrap()).collect()
}

/// Checks empirical mean and covariance against (mu, sigma) within z standard errors.
fn moments_match(xs: &[DVector<f64>], mu: &DVector<f64>, sigma: &DMatrix<f64>, z: f64) {
    let n = xs.len() as f64;
    let d = mu.len();
    let mean = xs.iter().fold(DVector::zeros(d), |acc, x| acc + x) / n;
    for i in 0..d {
        let se = (sigma[(i, i)] / n).sqrt();
        assert!((mean[i] - mu[i]).abs() <= z * se, "mean[{i}] {} vs {} (se {se:e})", mean[i], mu[i]);
    }
    let mut cov = DMatrix::zeros(d, d);
    for x in xs {
        let c = x - mu;
        cov += &c * c.transpose();
    }
    cov /= n;
    for i in 0..d {
        for j in 0..d {
            // Var of x_i x_j for a centred Gaussian pair
            let se = ((sigma[(i, i)] * sigma[(j, j)] + sigma[(i, j)].powi(2)) / n).sqrt();
            assert!((cov[(i, j)] - sigma[(i, j)]).abs() <= z * se, "cov[{i},{j}] {} vs {}", cov[(i, j)], sigma[(i, j)]);
        }
    }
}

#[test]
fn zero_rhs_gives_zero() {
    let (a, _, base) = setup(20, 4, 1);
    let h = noisy_solver(base, a, 3).unwrap();
    assert_eq!(h.solve(&DVector::zeros(4), 0.25).unwrap(), DVector::zeros(4));
}

#[test]
fn seeded_output_is_reproducible() {
    let (a, _, base) = setup(20, 4, 2);
    let b = gaussian_vector(4, 5);
    let run = |seed| {
        let h = noisy_solver(base.clone(), a.clone(), seed).unwrap();
        samples(&h, &b, 0.25, 5)
    };
    assert_eq!(run(7), run(7));
    assert_ne!(run(7), run(8));
}

#[test]
fn nonlinear_base_is_rejected() {
    let (a, _, base) = setup(10, 3, 3);
    let noisy = noisy_solver(base, a.clone(), 1).unwrap();
    assert!(!noisy.is_linear());
    assert!(matches!(NoisyHandle::new(noisy, a, None, 2), Err(Error::NotLinear(_))));
}

#[test]
fn inner_accuracies_follow_the_formulas() {
    let (a, _, base) = setup(12, 3, 4);
    let h = NoisyHandle::new(base, a, None, 0).unwrap();
    let (e1, e2) = h.inner_eps(0.25);
    assert!((e1 - 0.25 / (32.0 * 12f64.powi(7)).powi(2)).abs() <= 1e-12 * e1);
    assert!((e2 - 1.0 / (12.0 * 3.0 * 12f64.powi(6)).powi(2)).abs() <= 1e-12 * e2);
}

#[test]
fn identity_law() {
    let d = 4;
    let a = Arc::new(ConstraintMatrix::from_dense(&DMatrix::identity(d, d)).unwrap());
    let base = exact_factorize(&PdMatrix::identity(d)).unwrap();
    let h = noisy_solver(base, a, 11).unwrap();
    let mut e1 = DVector::zeros(d);
    e1[0] = 1.0;
    let eps = 0.25;
    let beta = 0.125 * (eps / d as f64).sqrt();
    let xs = samples(&h, &e1, eps, 10_000);
    moments_match(&xs, &e1, &(DMatrix::identity(d, d) * beta * beta), 3.0);

    let ideal: Vec<_> = (0..10_000u64).map(|s| ideal_solve(&PdMatrix::identity(d), d, &e1, eps, s).unwrap()).collect();
    // variance 0.25 / (64 n)
    moments_match(&ideal, &e1, &(DMatrix::identity(d, d) * (0.25 / (64.0 * d as f64))), 3.0);
}

#[test]
fn vanishing_noise() {
    let (_, m, _) = setup(30, 5, 6);
    let pm = PdMatrix::new(m.clone()).unwrap();
    let b = gaussian_vector(5, 1);
    let exact = m.clone().cholesky().unwrap().solve(&b);
    let x = ideal_solve(&pm, 30, &b, 1e-12, 2).unwrap();
    assert!((x - exact).amax() <= 1e-5);
}

#[test]
fn covariance_matches_the_ideal_law() {
    for (seed, d) in [(20u64, 3usize), (21, 5), (22, 8)] {
        let n = 4 * d;
        let (a, m, base) = setup(n, d, seed);
        let h = noisy_solver(base, a, seed).unwrap();
        let b = gaussian_vector(d, seed + 100);
        let eps = 0.25;
        let mu = m.clone().cholesky().unwrap().solve(&b);
        let beta = 0.125 * (eps / n as f64).sqrt() * mu.dot(&(&m * &mu)).sqrt();
        let sigma = m.clone().try_inverse().unwrap() * beta * beta;
        moments_match(&samples(&h, &b, eps, 10_000), &mu, &sigma, 5.0);
    }
}

#[test]
fn energy_test_against_ideal() {
    let (n, d) = (15, 5);
    let (a, m, base) = setup(n, d, 30);
    let h = noisy_solver(base, a, 31).unwrap();
    let b = gaussian_vector(d, 32);
    let eps = 0.25;
    let pm = PdMatrix::new(m).unwrap();
    let x = samples(&h, &b, eps, 10_000);
    let y: Vec<_> = (0..10_000u64).map(|s| ideal_solve(&pm, n, &b, eps, 1000 + s).unwrap()).collect();
    let t = energy_block_test(&x, &y, 50);
    assert!(!t.rejects(Z_999), "z = {}", t.z);

    // power check: a shift of a quarter noise scale is detected
    let shift_dir = gaussian_vector(d, 33).normalize();
    let spread = (x.iter().map(|v| (v - &x[0]).norm_squared()).sum::<f64>() / x.len() as f64).sqrt();
    let y_shift: Vec<_> = y.iter().map(|v| v + &shift_dir * (0.25 * spread)).collect();
    assert!(energy_block_test(&x, &y_shift, 50).rejects(Z_999));
}

#[test]
fn contract_holds_with_high_probability() {
    let (n, d) = (30, 6);
    let (a, m, base) = setup(n, d, 40);
    let h = noisy_solver(base, a.clone(), 41).unwrap();
    let mut fails = 0;
    for k in 0..1000u64 {
        let b = gaussian_vector(d, 2000 + k);
        let eps = [0.5, 0.1, 1e-4][k as usize % 3];
        if relative_m_error(&m, &h.solve(&b, eps).unwrap(), &b) > eps {
            fails += 1;
        }
    }
    assert!(fails <= 2, "{fails} failures");

    // the same with an iterative base solver
    let m_op: Arc<dyn LinearOp> = Arc::new(DenseOp(m.clone()));
    let pre: Arc<dyn LinearOp> = Arc::new(DenseOp((&m * 1.3).try_inverse().unwrap()));
    let rich =
        richardson_solver(m_op, pre, RichardsonOptions { l: Some(2.0), ..RichardsonOptions::default() }).unwrap();
    let h = noisy_solver(rich, a, 42).unwrap();
    let fails = (0..200u64)
        .filter(|k| {
            let b = gaussian_vector(d, 5000 + k);
            relative_m_error(&m, &h.solve(&b, 0.1).unwrap(), &b) > 0.1
        })
        .count();
    assert!(fails <= 1, "{fails} failures");
}

#[test]
fn gaussian_norm_concentrates() {
    let n = 100;
    let mut g = Gaussian::new(rng_from(5, &[0x0e15e]));
    let mut eta = vec![0.0; n];
    let mut over = 0;
    for _ in 0..10_000 {
        g.fill(&mut eta);
        if eta.iter().map(|x| x * x).sum::<f64>() > 2.0 * n as f64 {
            over += 1;
        }
    }
    assert!((over as f64) < 1e-3 * 10_000.0, "{over}");
}
