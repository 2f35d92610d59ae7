mod common;

use common::*;
use invmaint::maintenance::synthetic::{sparse_instance, SigmaDrift};
use invmaint::maintenance::*;
use invmaint::matrix::*;
use invmaint::solver::SolverHandle;
use invmaint::Error;
use nalgebra::DMatrix;
use std::sync::Arc;

fn dense_weights(w: &WeightVector) -> Vec<f64> {
    w.as_slice().to_vec()
}

fn contract(h: &SolverHandle, m: &DMatrix<f64>, eps: f64, seed: u64) {
    for k in 0..20 {
        let b = gaussian_vector(m.nrows(), seed * 100 + k);
        let err = relative_m_error(m, &h.solve(&b, eps).unwrap(), &b);
        assert!(err <= eps, "error {err} at eps {eps}");
    }
}

fn sigma_weighted(v: &[f64], s: &[f64]) -> f64 {
    v.iter().zip(s).map(|(x, w)| w * x * x).sum::<f64>().sqrt()
}

#[test]
fn every_mode_meets_the_contract() {
    let (n, d) = (300, 8);
    let a = Arc::new(sparse_instance(n, d, 3, 1).unwrap());
    let dense = a.to_dense();
    for mode in [Mode::L2, Mode::Sigma, Mode::Churn] {
        let cfg = StabilityConfig { mode, seed: 3, ..StabilityConfig::default() };
        let (mut s, h) = MaintenanceSession::new(a.clone(), &WeightVector::ones(n), cfg).unwrap();
        contract(&h, &dense_gram(&dense, &vec![1.0; n]), 0.1, 0);
        let mut drift = SigmaDrift::new(a.clone(), 5);
        let mut logd = vec![0.0; n];
        for k in 0..10u64 {
            let w = if mode == Mode::L2 {
                let g = gaussian_vector(n, 50 + k);
                let g = &g * (0.08 / g.norm());
                for (l, x) in logd.iter_mut().zip(g.iter()) {
                    *l += x;
                }
                WeightVector::new(logd.iter().map(|l| l.exp()).collect()).unwrap()
            } else {
                drift.next_weights().unwrap()
            };
            let h = s.round(&w).unwrap();
            contract(&h, &dense_gram(&dense, &dense_weights(&w)), 0.1, k + 1);
        }
    }
}

#[test]
fn identity_keeps_all_rows_and_solves_exactly() {
    let d = 6;
    let a = Arc::new(ConstraintMatrix::from_dense(&DMatrix::identity(d, d)).unwrap());
    let (s, h) = MaintenanceSession::new(a, &WeightVector::ones(d), StabilityConfig::default()).unwrap();
    assert_eq!(s.sparsifier_weights(), &[1.0; 6]);
    contract(&h, &DMatrix::identity(d, d), 1e-6, 9);
}

#[test]
fn l2_mode_uses_the_weights() {
    let n = 60;
    let a = Arc::new(sparse_instance(n, 5, 2, 2).unwrap());
    let d0 = WeightVector::new(gaussian_vector(n, 3).iter().map(|v| (0.3 * v).exp()).collect()).unwrap();
    let cfg = StabilityConfig { mode: Mode::L2, ..StabilityConfig::default() };
    let (s, _) = MaintenanceSession::new(a, &d0, cfg).unwrap();
    assert_eq!(s.sparsifier_weights(), d0.as_slice());
    assert_eq!(s.stats()[0].kept_rows, n);
}

#[test]
fn unchanged_weights_resample_nothing() {
    let n = 200;
    let a = Arc::new(sparse_instance(n, 10, 3, 4).unwrap());
    let w = WeightVector::ones(n);
    let (mut s, _) = MaintenanceSession::new(a, &w, StabilityConfig::default()).unwrap();
    let before = s.total_resampled();
    for _ in 0..3 {
        s.round(&w).unwrap();
        assert!(s.last_resampled().is_empty());
    }
    assert_eq!(s.total_resampled(), before);
    assert_eq!(s.restarts(), 0);
}

#[test]
fn jumps_are_rejected_before_mutation_and_can_be_split() {
    let n = 200;
    let a = Arc::new(sparse_instance(n, 10, 3, 5).unwrap());
    let dense = a.to_dense();
    let (mut s, _) = MaintenanceSession::new(a, &WeightVector::ones(n), StabilityConfig::default()).unwrap();
    let sigma = dense_leverage(&dense, &vec![1.0; n]);
    let i = (0..n).min_by(|&x, &y| sigma[x].total_cmp(&sigma[y])).unwrap();
    let mut w = vec![1.0; n];
    w[i] = 2.0;
    let wk = WeightVector::new(w.clone()).unwrap();
    assert!(matches!(s.round(&wk), Err(Error::StabilityViolation { norm: "inf", .. })));
    assert_eq!(s.round_index(), 0);
    let h = s.round_split(&wk).unwrap();
    assert!(s.round_index() >= 7);
    assert_eq!(s.weights(), &w[..]);
    contract(&h, &dense_gram(&dense, &w), 0.1, 3);
    // the moved coordinate leaves its d band at some intermediate point
    let resampled: Vec<usize> = s.stats().iter().skip(1).map(|r| r.resampled).collect();
    assert!(resampled.iter().sum::<usize>() >= 1);
}

#[test]
fn resamples_follow_the_bands() {
    let n = 400;
    let a = Arc::new(sparse_instance(n, 10, 3, 6).unwrap());
    let cfg = StabilityConfig { seed: 11, ..StabilityConfig::default() };
    let (lo, hi) = cfg.thresholds;
    let (mut s, _) = MaintenanceSession::new(a.clone(), &WeightVector::ones(n), cfg).unwrap();
    let mut d_old = vec![1.0; n];
    let mut sigma_old = s.leverage().to_vec();
    let mut drift = SigmaDrift::new(a, 2);
    let in_band = |x: f64, old: f64| x >= lo * old && x <= hi * old;
    let mut total = 0;
    for _ in 0..30 {
        let w = drift.next_weights().unwrap();
        s.round(&w).unwrap();
        let tau = s.leverage();
        let redrawn = s.last_resampled();
        for i in 0..n {
            let violated = !in_band(w[i], d_old[i]) || !in_band(tau[i], sigma_old[i]);
            assert_eq!(violated, redrawn.contains(&i), "coordinate {i}");
        }
        for &i in redrawn {
            d_old[i] = w[i];
            sigma_old[i] = tau[i];
        }
        total += redrawn.len();
    }
    assert!(total > 0);
}

#[test]
fn sparsifier_stays_valid_along_drift() {
    let (n, d) = (2000, 20);
    let (mut fails, mut checks) = (0, 0);
    for seed in 0..3u64 {
        let a = Arc::new(sparse_instance(n, d, 4, seed).unwrap());
        let cfg = StabilityConfig { seed, ..StabilityConfig::default() };
        let (mut s, _) = MaintenanceSession::new(a.clone(), &WeightVector::ones(n), cfg).unwrap();
        let mut drift = SigmaDrift::new(a.clone(), seed);
        for k in 0..20 {
            let w = drift.next_weights().unwrap();
            let h = s.round(&w).unwrap();
            let full = gram_product(&a, &w).unwrap();
            let hv = WeightVector::new(s.sparsifier_weights().to_vec()).unwrap();
            checks += 1;
            if !gram_product(&a, &hv).is_ok_and(|g| spectral_close(&g, &full, 0.1).unwrap().close) {
                fails += 1;
            }
            if k % 5 == 0 {
                contract(&h, full.matrix(), 0.1, k);
            }
        }
    }
    assert!(fails as f64 <= 0.02 * checks as f64, "{fails}/{checks}");
}

#[test]
fn kept_rows_respect_the_sampling_rate() {
    let (n, d, gamma) = (2000, 20, 40.0);
    let a = Arc::new(sparse_instance(n, d, 4, 9).unwrap());
    let sigma = dense_leverage(&a.to_dense(), &vec![1.0; n]);
    let expected: f64 = sigma.iter().map(|s| (gamma * s).min(1.0)).sum();
    let counts: Vec<f64> = (0..50u64)
        .map(|seed| {
            let cfg = StabilityConfig { gamma: Some(gamma), seed, ..StabilityConfig::default() };
            let (s, _) = MaintenanceSession::new(a.clone(), &WeightVector::ones(n), cfg).unwrap();
            s.stats()[0].kept_rows as f64
        })
        .collect();
    let mean = counts.iter().sum::<f64>() / 50.0;
    let se = (counts.iter().map(|c| (c - mean).powi(2)).sum::<f64>() / 49.0 / 50.0).sqrt();
    assert!(mean <= gamma * d as f64 + 3.0 * se);
    // estimated leverage is within eps_tau of sigma, so the mean is too
    assert!((mean - expected).abs() <= 0.1 * expected + 3.0 * se, "{mean} vs {expected}");
}

#[test]
fn forced_restarts_are_transparent() {
    let n = 300;
    let a = Arc::new(sparse_instance(n, 8, 3, 10).unwrap());
    let dense = a.to_dense();
    let cfg = StabilityConfig { budget: Some(1), ..StabilityConfig::default() };
    let (mut s, _) = MaintenanceSession::new(a.clone(), &WeightVector::ones(n), cfg).unwrap();
    let mut drift = SigmaDrift::new(a, 4);
    for k in 0..6 {
        let w = drift.next_weights().unwrap();
        let h = s.round(&w).unwrap();
        contract(&h, &dense_gram(&dense, &dense_weights(&w)), 0.1, k);
    }
    assert!(s.restarts() > 0);
    assert!(s.stats().iter().any(|r| r.restarted));
    assert!(s.telemetry_report().lines().count() > 6);
}

#[test]
fn churn_insert_and_remove() {
    let (n, d) = (50, 5);
    let a = Arc::new(sparse_instance(n, d, 3, 12).unwrap());
    let cfg = StabilityConfig { mode: Mode::Churn, churn_k: 2, ..StabilityConfig::default() };
    let (mut s, _) = MaintenanceSession::new(a.clone(), &WeightVector::ones(n), cfg).unwrap();

    let (cols, vals) = a.row(7);
    let dup: Vec<(usize, f64)> = cols.iter().copied().zip(vals.iter().copied()).collect();
    let w = WeightVector::ones(n + 1);
    let h = s.round_churn(&w, &[dup], &[]).unwrap();
    let a2 = s.matrix().clone();
    assert_eq!(a2.nrows(), n + 1);
    let dense2 = a2.to_dense();
    assert_eq!(dense2.row(n), dense2.row(7));
    contract(&h, &dense_gram(&dense2, &vec![1.0; n + 1]), 0.1, 1);
    let exact = invmaint::solver::exact_factorize(&gram_product(&a2, &w).unwrap()).unwrap();
    let b = gaussian_vector(d, 4);
    let m2 = dense_gram(&dense2, &vec![1.0; n + 1]);
    assert!(relative_m_error(&m2, &h.solve(&b, 1e-8).unwrap(), &b) <= 1e-8);
    assert!(relative_m_error(&m2, &exact.solve(&b, 1e-8).unwrap(), &b) <= 1e-12);

    let sigma = dense_leverage(&dense2, &vec![1.0; n + 1]);
    let r = (0..n + 1).min_by(|&x, &y| sigma[x].total_cmp(&sigma[y])).unwrap();
    let mut wv = vec![1.0; n + 1];
    wv[r] = 0.0;
    let h = s.round_churn(&WeightVector::new(wv.clone()).unwrap(), &[], &[r]).unwrap();
    contract(&h, &dense_gram(&dense2, &wv), 0.1, 2);
    let hv = WeightVector::new(s.sparsifier_weights().to_vec()).unwrap();
    let reduced = gram_product(&a2, &WeightVector::new(wv).unwrap()).unwrap();
    assert!(spectral_close(&gram_product(&a2, &hv).unwrap(), &reduced, 0.1).unwrap().close);

    let too_many = vec![vec![(0, 1.0)]; 3];
    let r = s.round_churn(&WeightVector::ones(n + 4), &too_many, &[]);
    assert!(matches!(r, Err(Error::ChurnBudgetExceeded { changes: 3, budget: 2 })));
}

#[test]
fn leverage_continuity_on_random_pairs() {
    let mut worst = 0.0f64;
    for seed in 0..500u64 {
        let d = 1 + (seed % 20) as usize;
        let n = d + 1 + (seed * 7 % (200 - d as u64)) as usize;
        let a = gaussian_matrix(n, d, seed);
        let x: Vec<f64> = gaussian_vector(n, seed ^ 0xaa).iter().map(|v| v.exp()).collect();
        let shift = gaussian_vector(n, seed ^ 0xbb);
        let y: Vec<f64> = x.iter().zip(shift.iter()).map(|(xi, s)| xi * (0.1 * s.tanh()).exp()).collect();
        let cm = ConstraintMatrix::from_dense(&a).unwrap();
        let r = leverage_stability_check(
            &cm,
            &WeightVector::new(x.clone()).unwrap(),
            &WeightVector::new(y.clone()).unwrap(),
        )
        .unwrap();
        assert!(r.eps <= 0.1);
        // both sides from the dense oracle
        let (sx, sy) = (dense_leverage(&a, &x), dense_leverage(&a, &y));
        let dl: Vec<f64> = sx.iter().zip(&sy).map(|(p, q)| (q / p).ln()).collect();
        let dw: Vec<f64> = x.iter().zip(&y).map(|(p, q)| (q / p).ln()).collect();
        let (lhs, rhs) = (sigma_weighted(&dl, &sx), r.eps.exp() * sigma_weighted(&dw, &sx));
        assert!((lhs - r.lhs).abs() <= 1e-8 * (1.0 + lhs) && (rhs - r.rhs).abs() <= 1e-8 * (1.0 + rhs));
        assert!(lhs <= rhs * (1.0 + 1e-9), "seed {seed}: {lhs} > {rhs}");
        assert!(r.holds());
        worst = worst.max(r.ratio());
    }
    assert!(worst <= 1.0);
}

#[test]
fn leverage_is_scale_invariant() {
    for seed in 0..20u64 {
        let a = gaussian_matrix(40, 5, seed);
        let x: Vec<f64> = gaussian_vector(40, seed + 1).iter().map(|v| v.exp()).collect();
        let c = 0.01 + seed as f64 * 3.7;
        let cx: Vec<f64> = x.iter().map(|v| c * v).collect();
        let (s1, s2) = (dense_leverage(&a, &x), dense_leverage(&a, &cx));
        assert!(s1.iter().zip(&s2).all(|(p, q)| (p - q).abs() <= 1e-10));
        let cm = ConstraintMatrix::from_dense(&a).unwrap();
        let r = leverage_stability_check(&cm, &WeightVector::new(x).unwrap(), &WeightVector::new(cx).unwrap()).unwrap();
        assert!(r.lhs <= 1e-7 && (c == 1.0 || r.rhs > 0.0));
    }
}
