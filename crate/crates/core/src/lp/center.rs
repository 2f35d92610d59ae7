use super::newton::NormalSolver;
use crate::error::{Error, Result};
use crate::maintenance::StabilityConfig;
use crate::matrix::{gram_product, Cholesky, ConstraintMatrix, WeightVector};
use nalgebra::{DMatrix, DVector};
use std::sync::Arc;

#[derive(Debug, Clone)]
pub struct CenterConfig {
    /// Stop once the Newton decrement is at most this.
    pub tol: f64,
    pub session: StabilityConfig,
    pub noisy: bool,
    pub solve_eps: f64,
    pub max_iterations: usize,
}

impl Default for CenterConfig {
    fn default() -> Self {
        CenterConfig {
            tol: 1e-9,
            session: StabilityConfig::default(),
            noisy: false,
            solve_eps: 1e-20,
            max_iterations: 2000,
        }
    }
}

/// Result of centering.
#[derive(Debug, Clone)]
pub struct Center {
    pub x: DVector<f64>,
    /// Newton decrement at x.
    pub decrement: f64,
    pub iterations: usize,
    /// Shifted problems solved before the unshifted one.
    pub phases: usize,
}

struct Polytope<'a> {
    a: &'a Arc<ConstraintMatrix>,
    b: &'a DVector<f64>,
    w: &'a [f64],
}

impl Polytope<'_> {
    fn slack(&self, x: &DVector<f64>, shift: f64) -> DVector<f64> {
        self.a.apply(x) - self.b + DVector::from_element(self.b.len(), shift)
    }

    fn hess_weights(&self, s: &DVector<f64>) -> Vec<f64> {
        s.iter().zip(self.w).map(|(s, w)| w / (s * s)).collect()
    }

    /// Damped Newton on -sum w_i ln(a_i^T x - b_i + shift) from an interior x.
    fn newton(
        &self,
        mut x: DVector<f64>,
        shift: f64,
        tol: f64,
        cfg: &CenterConfig,
        budget: &mut usize,
    ) -> Result<(DVector<f64>, f64)> {
        let s0 = self.slack(&x, shift);
        let s0_max = s0.amax();
        let mut solver =
            NormalSolver::new(self.a.clone(), self.hess_weights(&s0), cfg.session.clone(), cfg.noisy, cfg.solve_eps)?;
        let mut theta = 1.0;
        loop {
            let s = self.slack(&x, shift);
            if s.amax() > 1e12 * (1.0 + s0_max) {
                return Err(Error::Unbounded);
            }
            let ws = DVector::from_fn(s.len(), |i, _| self.w[i] / s[i]);
            let g = -self.a.apply_t(&ws);
            let step = -solver.solve(&g)?;
            let lam = (-g.dot(&step)).max(0.0).sqrt();
            if lam <= tol {
                return Ok((x, lam));
            }
            if *budget == 0 {
                return Err(Error::IterationLimit(cfg.max_iterations));
            }
            let x_new = &x + &step * (theta / (1.0 + lam));
            let s_new = self.slack(&x_new, shift);
            let accepted = s_new.iter().all(|&v| v > 0.0)
                && match solver.advance(self.hess_weights(&s_new)) {
                    Ok(()) => true,
                    Err(Error::StabilityViolation { .. }) => false,
                    Err(e) => return Err(e),
                };
            if !accepted {
                theta *= 0.5;
                if theta < 1e-12 {
                    return Err(Error::IterationLimit(cfg.max_iterations));
                }
                continue;
            }
            *budget -= 1;
            x = x_new;
            theta = (theta * 2.0).min(1.0);
        }
    }
}

/// Minimiser of -sum_i w_i ln(a_i^T x - b_i) over {x : A x > b}.
///
/// Starts from `start` (zero if absent). When the start is not interior the
/// constraints are relaxed by a shift that is driven to zero through a
/// sequence of centred shifted problems.
pub fn analytic_center(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    w: &WeightVector,
    start: Option<&DVector<f64>>,
    cfg: &CenterConfig,
) -> Result<Center> {
    let a = &sparse(a)?;
    center_sparse(a, b, w, start, cfg)
}

/// A rank deficient constraint matrix leaves a direction of recession.
fn sparse(a: &DMatrix<f64>) -> Result<Arc<ConstraintMatrix>> {
    match ConstraintMatrix::from_dense(a) {
        Ok(m) => Ok(Arc::new(m)),
        Err(Error::RankDeficient { .. }) => Err(Error::Unbounded),
        Err(e) => Err(e),
    }
}

fn center_sparse(
    a: &Arc<ConstraintMatrix>,
    b: &DVector<f64>,
    w: &WeightVector,
    start: Option<&DVector<f64>>,
    cfg: &CenterConfig,
) -> Result<Center> {
    let (n, d) = (a.nrows(), a.ncols());
    if b.len() != n || w.len() != n {
        return Err(Error::DimensionMismatch(format!("{n} constraints")));
    }
    if w.as_slice().iter().any(|&v| v <= 0.0) {
        return Err(Error::InvalidArgument("centering weights must be positive".into()));
    }
    let poly = Polytope { a, b, w: w.as_slice() };
    let mut x = start.cloned().unwrap_or_else(|| DVector::zeros(d));
    if x.len() != d {
        return Err(Error::DimensionMismatch("start point".into()));
    }
    let mut budget = cfg.max_iterations;
    let violation = |x: &DVector<f64>| (b - a.apply(x)).max();
    let mut v = violation(&x);
    let mut phases = 0;
    if v >= 0.0 {
        let m0 = v + 1.0;
        let mut m = m0;
        loop {
            x = poly.newton(x, m, 0.25, cfg, &mut budget)?.0;
            phases += 1;
            v = violation(&x);
            if v < 0.0 {
                break;
            }
            let next = (m0 * 0.5f64.powi(phases as i32)).max(0.5 * (m + v));
            if m - next <= 1e-12 * m0 || phases > 200 {
                return Err(Error::NoInterior);
            }
            m = next;
        }
    }
    let (x, decrement) = poly.newton(x, 0.0, cfg.tol, cfg, &mut budget)?;
    Ok(Center { x, decrement, iterations: cfg.max_iterations - budget, phases })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RoundingWeights {
    /// Unit weights: E(x*, 1) inside P inside E(x*, n).
    Uniform,
    /// Approximate Lewis weights from a damped fixed point of w <- sigma(w).
    Lewis { iterations: usize },
}

/// Ellipsoids {x : (x - center)^T shape (x - center) <= r^2} with r =
/// `inner_scale` inside P and r = `outer_scale` containing P.
#[derive(Debug, Clone)]
pub struct EllipsoidRounding {
    pub center: DVector<f64>,
    pub shape: DMatrix<f64>,
    pub inner_scale: f64,
    pub outer_scale: f64,
    pub gamma: f64,
    pub weights: Vec<f64>,
}

impl EllipsoidRounding {
    /// ||x - center||_shape.
    pub fn norm(&self, x: &DVector<f64>) -> f64 {
        let z = x - &self.center;
        (&self.shape * &z).dot(&z).max(0.0).sqrt()
    }
}

fn weighted_hessian(a: &ConstraintMatrix, s: &DVector<f64>, w: &[f64]) -> Result<DMatrix<f64>> {
    let hw = WeightVector::new(s.iter().zip(w).map(|(s, w)| w / (s * s)).collect())?;
    Ok(gram_product(a, &hw)?.into_matrix())
}

/// Rounding ellipsoids for {x : A x >= b} at its (weighted) analytic center.
pub fn rounding_ellipsoid(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    weights: RoundingWeights,
    start: Option<&DVector<f64>>,
    cfg: &CenterConfig,
) -> Result<EllipsoidRounding> {
    let a = &sparse(a)?;
    let (n, d) = (a.nrows(), a.ncols());
    let mut w = vec![1.0; n];
    let mut x0 = start.cloned();
    if let RoundingWeights::Lewis { iterations } = weights {
        w = vec![d as f64 / n as f64; n];
        let loose = CenterConfig { tol: 1e-6, ..cfg.clone() };
        for _ in 0..iterations {
            let c = center_sparse(a, b, &WeightVector::new(w.clone())?, x0.as_ref(), &loose)?;
            let s = a.apply(&c.x) - b;
            let h = Cholesky::new(&weighted_hessian(a, &s, &w)?)?;
            for i in 0..n {
                let ai = a.row_dense(i);
                let sigma = w[i] * ai.dot(&h.solve(&ai)) / (s[i] * s[i]);
                w[i] = (0.5 * w[i] + 0.5 * sigma).max(1e-12);
            }
            x0 = Some(c.x);
        }
    }
    let c = center_sparse(a, b, &WeightVector::new(w.clone())?, x0.as_ref(), cfg)?;
    let s = a.apply(&c.x) - b;
    let shape = weighted_hessian(a, &s, &w)?;
    if matches!(weights, RoundingWeights::Uniform) {
        return Ok(EllipsoidRounding {
            center: c.x,
            shape,
            inner_scale: 1.0,
            outer_scale: n as f64,
            gamma: 1.0,
            weights: w,
        });
    }
    let h = Cholesky::new(&shape)?;
    let gamma = (0..n)
        .map(|i| {
            let ai = a.row_dense(i);
            ai.dot(&h.solve(&ai)).sqrt() / s[i]
        })
        .fold(1.0f64, f64::max);
    // distance to the exact center in the local norm, from the decrement
    let lam = c.decrement.min(0.5);
    let delta = lam / (1.0 - lam);
    let total: f64 = w.iter().sum();
    let inner = (1.0 / gamma - delta) / (1.0 + gamma * delta);
    let outer = (gamma * total + delta) / (1.0 - gamma * delta).max(f64::MIN_POSITIVE);
    Ok(EllipsoidRounding { center: c.x, shape, inner_scale: inner, outer_scale: outer, gamma, weights: w })
}
