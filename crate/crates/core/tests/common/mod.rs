//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use invmaint::rng::{rng_from, Gaussian};
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use std::collections::VecDeque;

const TOL: f64 = 1e-9;

/// Dense two-phase simplex with Bland's rule for
/// min c^T z subject to M z = q, z >= 0. Returns None when infeasible or
/// unbounded.
pub fn simplex_standard(m: &DMatrix<f64>, q: &DVector<f64>, c: &DVector<f64>) -> Option<(DVector<f64>, f64)> {
    let (rows, cols) = (m.nrows(), m.ncols());
    // tableau columns: z (cols), artificials (rows), rhs
    let width = cols + rows + 1;
    let mut t = DMatrix::zeros(rows, width);
    for i in 0..rows {
        let sign = if q[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..cols {
            t[(i, j)] = sign * m[(i, j)];
        }
        t[(i, cols + i)] = 1.0;
        t[(i, width - 1)] = sign * q[i];
    }
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    let run = |t: &mut DMatrix<f64>, basis: &mut Vec<usize>, cost: &DVector<f64>, allowed: usize| -> bool {
        loop {
            // reduced costs
            let mut enter = None;
            for j in 0..allowed {
                if basis.contains(&j) {
                    continue;
                }
                let mut r = cost[j];
                for (i, &bv) in basis.iter().enumerate() {
                    r -= cost[bv] * t[(i, j)];
                }
                if r < -TOL {
                    enter = Some(j);
                    break;
                }
            }
            let Some(j) = enter else { return true };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..t.nrows() {
                if t[(i, j)] > TOL {
                    let ratio = t[(i, width - 1)] / t[(i, j)];
                    match leave {
                        Some((li, lr)) if ratio > lr + TOL || (ratio > lr - TOL && basis[i] > basis[li]) => {}
                        _ => leave = Some((i, ratio)),
                    }
                }
            }
            let Some((i, _)) = leave else { return false };
            let p = t[(i, j)];
            for k in 0..width {
                t[(i, k)] /= p;
            }
            for r in 0..t.nrows() {
                if r != i {
                    let f = t[(r, j)];
                    if f != 0.0 {
                        for k in 0..width {
                            t[(r, k)] -= f * t[(i, k)];
                        }
                    }
                }
            }
            basis[i] = j;
        }
    };

    let mut phase1 = DVector::zeros(cols + rows);
    for i in cols..cols + rows {
        phase1[i] = 1.0;
    }
    run(&mut t, &mut basis, &phase1, cols + rows);
    let infeas: f64 = basis.iter().enumerate().filter(|(_, &b)| b >= cols).map(|(i, _)| t[(i, width - 1)]).sum();
    if infeas > 1e-7 * (1.0 + q.amax()) {
        return None;
    }
    // drive remaining artificials out of the basis where possible
    for i in 0..rows {
        if basis[i] >= cols {
            if let Some(j) = (0..cols).find(|&j| !basis.contains(&j) && t[(i, j)].abs() > 1e-7) {
                let p = t[(i, j)];
                for k in 0..width {
                    t[(i, k)] /= p;
                }
                for r in 0..rows {
                    if r != i {
                        let f = t[(r, j)];
                        for k in 0..width {
                            t[(r, k)] -= f * t[(i, k)];
                        }
                    }
                }
                basis[i] = j;
            }
        }
    }
    let mut phase2 = DVector::zeros(cols + rows);
    for j in 0..cols {
        phase2[j] = c[j];
    }
    // artificials left in the basis sit on redundant rows at value 0
    for i in cols..cols + rows {
        phase2[i] = 0.0;
    }
    if !run(&mut t, &mut basis, &phase2, cols) {
        return None;
    }
    let mut z = DVector::zeros(cols);
    for (i, &b) in basis.iter().enumerate() {
        if b < cols {
            z[b] = t[(i, width - 1)];
        }
    }
    let obj = c.dot(&z);
    Some((z, obj))
}

/// min c^T x subject to A x = b, l <= x <= u.
pub fn simplex_box(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    c: &DVector<f64>,
    l: &DVector<f64>,
    u: &DVector<f64>,
) -> Option<(DVector<f64>, f64)> {
    let (d, n) = (a.nrows(), a.ncols());
    // x = l + x', x' + s = u - l
    let mut m = DMatrix::zeros(d + n, 2 * n);
    m.view_mut((0, 0), (d, n)).copy_from(a);
    for i in 0..n {
        m[(d + i, i)] = 1.0;
        m[(d + i, n + i)] = 1.0;
    }
    let mut q = DVector::zeros(d + n);
    q.rows_mut(0, d).copy_from(&(b - a * l));
    q.rows_mut(d, n).copy_from(&(u - l));
    let mut cc = DVector::zeros(2 * n);
    cc.rows_mut(0, n).copy_from(c);
    let (z, _) = simplex_standard(&m, &q, &cc)?;
    let x = l + z.rows(0, n);
    let obj = c.dot(&x);
    Some((x, obj))
}

/// min b^T y + ||A y + c||_1 as an LP over (y+, y-, t).
pub fn l1_dual_reference(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>) -> Option<f64> {
    let (n, d) = (a.nrows(), a.ncols());
    // A y + c = p - m, p, m >= 0, objective b^T y + 1^T (p + m)
    let cols = 2 * d + 2 * n;
    let mut m = DMatrix::zeros(n, cols);
    for i in 0..n {
        for j in 0..d {
            m[(i, j)] = a[(i, j)];
            m[(i, d + j)] = -a[(i, j)];
        }
        m[(i, 2 * d + i)] = -1.0;
        m[(i, 2 * d + n + i)] = 1.0;
    }
    let q = -c;
    let mut cost = DVector::zeros(cols);
    for j in 0..d {
        cost[j] = b[j];
        cost[d + j] = -b[j];
    }
    for i in 0..2 * n {
        cost[2 * d + i] = 1.0;
    }
    simplex_standard(&m, &q, &cost).map(|(_, v)| v)
}

/// min ||A x - c||_1.
pub fn l1_reference(a: &DMatrix<f64>, c: &DVector<f64>) -> f64 {
    l1_dual_reference(a, &DVector::zeros(a.ncols()), &-c).expect("l1 regression is always feasible")
}

/// min ||A x - c||_inf as an LP over (x+, x-, t, slacks).
pub fn linf_reference(a: &DMatrix<f64>, c: &DVector<f64>) -> f64 {
    let (n, d) = (a.nrows(), a.ncols());
    // A x - c + t - s1 = 0 ... written as  A x + t 1 - s1 = c  and  -A x + t 1 - s2 = -c
    let cols = 2 * d + 1 + 2 * n;
    let mut m = DMatrix::zeros(2 * n, cols);
    let mut q = DVector::zeros(2 * n);
    for i in 0..n {
        for j in 0..d {
            m[(i, j)] = a[(i, j)];
            m[(i, d + j)] = -a[(i, j)];
            m[(n + i, j)] = -a[(i, j)];
            m[(n + i, d + j)] = a[(i, j)];
        }
        m[(i, 2 * d)] = 1.0;
        m[(n + i, 2 * d)] = 1.0;
        m[(i, 2 * d + 1 + i)] = -1.0;
        m[(n + i, 2 * d + 1 + n + i)] = -1.0;
        q[i] = c[i];
        q[n + i] = -c[i];
    }
    let mut cost = DVector::zeros(cols);
    cost[2 * d] = 1.0;
    simplex_standard(&m, &q, &cost).map(|(_, v)| v).expect("Chebyshev LP is always feasible")
}

/// Best value of a dual l1 objective found by subgradient descent with
/// diminishing steps; an upper bound on the minimum.
pub fn subgradient_dual(a: &DMatrix<f64>, b: &DVector<f64>, c: &DVector<f64>, iters: usize) -> f64 {
    let f = |y: &DVector<f64>| b.dot(y) + (a * y + c).iter().map(|v| v.abs()).sum::<f64>();
    let mut y = DVector::zeros(a.ncols());
    let mut best = f(&y);
    for k in 0..iters {
        let r = a * &y + c;
        let g = b + a.tr_mul(&r.map(|v| {
            if v > 0.0 {
                1.0
            } else if v < 0.0 {
                -1.0
            } else {
                0.0
            }
        }));
        let gn = g.norm();
        if gn == 0.0 {
            break;
        }
        y -= &g * (0.5 / ((k + 1) as f64).sqrt() / gn);
        best = best.min(f(&y));
    }
    best
}

/// Minimum of f over a grid of `steps` points in [lo, hi], refined by
/// golden-section search around the best grid point. f must be convex.
pub fn scan_1d(f: impl Fn(f64) -> f64, lo: f64, hi: f64, steps: usize) -> (f64, f64) {
    let h = (hi - lo) / steps as f64;
    let (mut bx, mut bv) = (lo, f(lo));
    for k in 1..=steps {
        let x = lo + h * k as f64;
        let v = f(x);
        if v < bv {
            bx = x;
            bv = v;
        }
    }
    let (mut a, mut b) = (bx - h, bx + h);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..200 {
        let x1 = b - g * (b - a);
        let x2 = a + g * (b - a);
        if f(x1) < f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x).min(bv))
}

/// Successive shortest paths (Bellman-Ford) for minimum cost maximum flow.
/// Arcs are (from, to, cap, cost). Returns (flow value, cost).
pub fn ssp_min_cost_flow(nodes: usize, arcs: &[(usize, usize, i64, i64)], s: usize, t: usize) -> (i64, i64) {
    // residual graph as edge list with paired reverse edges
    let mut to = Vec::new();
    let mut cap = Vec::new();
    let mut cost = Vec::new();
    let mut from = Vec::new();
    for &(u, v, c, w) in arcs {
        from.push(u);
        to.push(v);
        cap.push(c);
        cost.push(w);
        from.push(v);
        to.push(u);
        cap.push(0);
        cost.push(-w);
    }
    let (mut value, mut total) = (0i64, 0i64);
    loop {
        let mut dist = vec![i64::MAX; nodes];
        let mut pred = vec![usize::MAX; nodes];
        dist[s] = 0;
        for _ in 0..nodes {
            let mut changed = false;
            for e in 0..to.len() {
                if cap[e] > 0 && dist[from[e]] != i64::MAX && dist[from[e]] + cost[e] < dist[to[e]] {
                    dist[to[e]] = dist[from[e]] + cost[e];
                    pred[to[e]] = e;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        if dist[t] == i64::MAX {
            return (value, total);
        }
        let mut push = i64::MAX;
        let mut v = t;
        while v != s {
            let e = pred[v];
            push = push.min(cap[e]);
            v = from[e];
        }
        let mut v = t;
        while v != s {
            let e = pred[v];
            cap[e] -= push;
            cap[e ^ 1] += push;
            v = from[e];
        }
        value += push;
        total += push * dist[t];
    }
}

/// Edmonds-Karp maximum flow.
pub fn max_flow(nodes: usize, arcs: &[(usize, usize, i64)], s: usize, t: usize) -> i64 {
    let mut res = vec![vec![0i64; nodes]; nodes];
    for &(u, v, c) in arcs {
        res[u][v] += c;
    }
    let mut flow = 0;
    loop {
        let mut pred = vec![usize::MAX; nodes];
        pred[s] = s;
        let mut q = VecDeque::from([s]);
        while let Some(u) = q.pop_front() {
            for v in 0..nodes {
                if pred[v] == usize::MAX && res[u][v] > 0 {
                    pred[v] = u;
                    q.push_back(v);
                }
            }
        }
        if pred[t] == usize::MAX {
            return flow;
        }
        let mut push = i64::MAX;
        let mut v = t;
        while v != s {
            push = push.min(res[pred[v]][v]);
            v = pred[v];
        }
        let mut v = t;
        while v != s {
            res[pred[v]][v] -= push;
            res[v][pred[v]] += push;
            v = pred[v];
        }
        flow += push;
    }
}

pub fn gaussian_matrix(rows: usize, cols: usize, seed: u64) -> DMatrix<f64> {
    let mut g = Gaussian::new(rng_from(seed, &[0x7e57]));
    DMatrix::from_fn(rows, cols, |_, _| g.sample())
}

pub fn gaussian_vector(n: usize, seed: u64) -> DVector<f64> {
    let mut g = Gaussian::new(rng_from(seed, &[0x7e58]));
    DVector::from_fn(n, |_, _| g.sample())
}

/// Random box LP: A Gaussian d x n, x0 uniform in (0.1, 0.9)^n, b = A x0,
/// c Gaussian.
pub struct RandomLp {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub c: DVector<f64>,
    pub x0: DVector<f64>,
}

pub fn random_lp(d: usize, n: usize, seed: u64) -> RandomLp {
    let a = gaussian_matrix(d, n, seed);
    let mut rng = rng_from(seed, &[0x1b]);
    let x0 = DVector::from_fn(n, |_, _| rng.random_range(0.1..0.9));
    let b = &a * &x0;
    let c = gaussian_vector(n, seed ^ 0xc);
    RandomLp { a, b, c, x0 }
}

/// ||x - M^-1 b||_M^2 / ||M^-1 b||_M^2 using nalgebra's own factorization.
pub fn relative_m_error(m: &DMatrix<f64>, x: &DVector<f64>, b: &DVector<f64>) -> f64 {
    let exact = m.clone().cholesky().expect("PD reference matrix").solve(b);
    let e = x - &exact;
    e.dot(&(m * &e)) / exact.dot(&(m * &exact))
}

/// Sum_i w_i a_i a_i^T accumulated row by row.
pub fn dense_gram(a: &DMatrix<f64>, w: &[f64]) -> DMatrix<f64> {
    let d = a.ncols();
    let mut g = DMatrix::zeros(d, d);
    for i in 0..a.nrows() {
        let r = a.row(i).transpose();
        g += &r * r.transpose() * w[i];
    }
    g
}

/// G G^T + d I for Gaussian G.
pub fn random_pd(d: usize, seed: u64) -> DMatrix<f64> {
    let g = gaussian_matrix(d, d, seed);
    &g * g.transpose() + DMatrix::identity(d, d) * d as f64
}

/// Leverage scores of diag(w)^{1/2} A through an explicit inverse.
pub fn dense_leverage(a: &DMatrix<f64>, w: &[f64]) -> Vec<f64> {
    let inv = dense_gram(a, w).try_inverse().expect("invertible Gram matrix");
    (0..a.nrows())
        .map(|i| {
            let r = a.row(i).transpose();
            w[i] * r.dot(&(&inv * &r))
        })
        .collect()
}

/// Extreme eigenvalues of N^{-1/2} M N^{-1/2} via a symmetric eigensolver.
pub fn generalized_range(m: &DMatrix<f64>, n: &DMatrix<f64>) -> (f64, f64) {
    let l = n.clone().cholesky().expect("PD").l();
    let li = l.try_inverse().expect("invertible factor");
    let c = &li * m * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    let ev = c.symmetric_eigenvalues();
    (ev.min(), ev.max())
}
