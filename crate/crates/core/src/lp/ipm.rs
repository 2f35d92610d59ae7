use super::newton::NormalSolver;
use super::LpProblem;
use crate::error::{Error, Result};
use crate::maintenance::StabilityConfig;
use nalgebra::DVector;

#[derive(Debug, Clone)]
pub struct IpmConfig {
    pub session: StabilityConfig,
    /// Solve the Newton systems through the noisy wrapper.
    pub noisy: bool,
    /// Accuracy requested from the Newton system solver.
    pub solve_eps: f64,
    /// The barrier parameter grows by 1 + kappa / sqrt(n) per step; kappa
    /// starts here, halves on a stability violation and doubles after two
    /// accepted steps, up to `kappa_max`.
    pub kappa: f64,
    pub kappa_max: f64,
    /// Defaults to 64 sqrt(n) ln(n U / eps).
    pub max_iterations: Option<usize>,
}

impl Default for IpmConfig {
    fn default() -> Self {
        IpmConfig {
            session: StabilityConfig::default(),
            noisy: true,
            solve_eps: 1e-32,
            kappa: 1.0 / 32.0,
            kappa_max: 1.0,
            max_iterations: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpStats {
    pub iterations: usize,
    pub halvings: usize,
    pub resampled: usize,
    pub restarts: usize,
    pub objective: f64,
    pub residual: f64,
    /// Final barrier parameter.
    pub t: f64,
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub y: DVector<f64>,
    /// Approximate multipliers of A x = b.
    pub multipliers: DVector<f64>,
    pub stats: LpStats,
}

/// sqrt(r^T A S^-2 A^T r) for r = A y - b and S_ii = min(u_i - y_i, y_i - l_i).
pub fn equality_residual(p: &LpProblem, y: &DVector<f64>) -> f64 {
    let r = p.apply_a(y) - &p.b;
    let atr = p.at.apply(&r);
    (0..p.n())
        .map(|i| {
            let s = (p.u[i] - y[i]).min(y[i] - p.l[i]);
            (atr[i] / s).powi(2)
        })
        .sum::<f64>()
        .sqrt()
}

struct Barrier<'a> {
    p: &'a LpProblem,
}

impl Barrier<'_> {
    fn grad(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(x.len(), |i, _| 1.0 / (self.p.u[i] - x[i]) - 1.0 / (x[i] - self.p.l[i]))
    }

    /// Inverse Hessian diagonal.
    fn weights(&self, x: &DVector<f64>) -> Vec<f64> {
        (0..x.len())
            .map(|i| {
                let a = self.p.u[i] - x[i];
                let b = x[i] - self.p.l[i];
                1.0 / (1.0 / (a * a) + 1.0 / (b * b))
            })
            .collect()
    }

    fn interior(&self, x: &DVector<f64>) -> bool {
        (0..x.len()).all(|i| x[i] > self.p.l[i] && x[i] < self.p.u[i])
    }
}

fn dual_norm(v: &DVector<f64>, w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(x, d)| d * x * x).sum::<f64>().sqrt()
}

/// Short-step log-barrier path following. The path through x0 for the
/// objective -grad(x0) is followed towards the analytic center, then the
/// path for c is followed out to a gap below eps.
pub fn solve_lp(p: &LpProblem, eps: f64, cfg: &IpmConfig) -> Result<LpSolution> {
    solve_lp_until(p, eps, cfg, &mut |_| false)
}

/// [`solve_lp`] that also stops at the first iterate on the objective path
/// for which `stop` holds.
pub(crate) fn solve_lp_until(
    p: &LpProblem,
    eps: f64,
    cfg: &IpmConfig,
    stop: &mut dyn FnMut(&DVector<f64>) -> bool,
) -> Result<LpSolution> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("eps must be positive, got {eps}")));
    }
    p.check_start()?;
    let n = p.n();
    let nf = n as f64;
    let bar = Barrier { p };
    let limit =
        cfg.max_iterations.unwrap_or_else(|| (64.0 * nf.sqrt() * (nf * p.width() / eps).ln().max(1.0)).ceil() as usize);

    let mut x = p.x0.clone();
    let c_aux = -bar.grad(&x);
    let c_aux_l1 = c_aux.iter().map(|v| v.abs()).sum::<f64>();
    let range = (0..n).map(|i| p.u[i] - p.l[i]).fold(0.0f64, f64::max);
    let has_objective = p.c.amax() > 0.0;
    let mut w = bar.weights(&x);
    let mut solver = NormalSolver::new(p.at.clone(), w.clone(), cfg.session.clone(), cfg.noisy, cfg.solve_eps)?;
    let mut lambda = DVector::zeros(p.d());
    let (mut t, mut s) = (0.0f64, 1.0f64);
    let mut kappa = cfg.kappa;
    let mut theta = 1.0;
    let mut streak = 0;
    let mut iterations = 0;
    let mut halvings = 0;
    let nu = 2.0 * nf;

    loop {
        let done = if has_objective {
            t > 0.0 && (nu + 2.0 * nu.sqrt()) / t + s / t * c_aux_l1 * range <= eps / 2.0
        } else {
            s * dual_norm(&c_aux, &w) <= 1e-3
        };
        if done || (t > 0.0 && stop(&x)) {
            break;
        }
        if iterations >= limit {
            return Err(Error::IterationLimit(iterations));
        }
        let m = 1.0 + kappa / nf.sqrt();
        let (t_new, s_new) = if t > 0.0 {
            (t * m, s / m)
        } else if has_objective && s * dual_norm(&c_aux, &w) <= 0.1 {
            (0.1 / dual_norm(&p.c, &w), s / m)
        } else {
            (0.0, s / m)
        };
        let g = &p.c * t_new + &c_aux * s_new + bar.grad(&x);
        let r = &p.b - p.apply_a(&x);
        let resid = g.clone() - p.at.apply(&lambda);
        let wr = DVector::from_fn(n, |i, _| w[i] * resid[i]);
        let rhs = r + p.apply_a(&wr);
        let dl = solver.solve(&rhs)?;
        let lam_new = &lambda + dl;
        let atl = p.at.apply(&lam_new);
        let step = DVector::from_fn(n, |i, _| w[i] * (atl[i] - g[i]));

        let x_new = &x + &step * theta;
        let accepted = bar.interior(&x_new) && {
            let w_new = bar.weights(&x_new);
            match solver.advance(w_new.clone()) {
                Ok(()) => {
                    w = w_new;
                    true
                }
                Err(Error::StabilityViolation { .. }) => false,
                Err(e) => return Err(e),
            }
        };
        if !accepted {
            halvings += 1;
            streak = 0;
            if kappa > cfg.kappa / 64.0 {
                kappa *= 0.5;
            } else {
                theta *= 0.5;
                if theta < 1e-12 {
                    return Err(Error::IterationLimit(iterations));
                }
            }
            continue;
        }
        x = x_new;
        lambda = lam_new;
        t = t_new;
        s = s_new;
        theta = 1.0;
        iterations += 1;
        streak += 1;
        if streak >= 2 {
            kappa = (kappa * 2.0).min(cfg.kappa_max);
            streak = 0;
        }
    }
    // Float cancellation in the Newton step grows with t; a few minimal
    // corrections in the local norm bring A x back to b.
    for _ in 0..3 {
        let r = &p.b - p.apply_a(&x);
        if r.amax() == 0.0 {
            break;
        }
        let atz = p.at.apply(&solver.solve(&r)?);
        let cand = DVector::from_fn(n, |i, _| x[i] + w[i] * atz[i]);
        if !bar.interior(&cand) || (&p.b - p.apply_a(&cand)).amax() >= r.amax() {
            break;
        }
        x = cand;
    }
    let multipliers = if t > 0.0 { &lambda / t } else { DVector::zeros(p.d()) };
    let stats = LpStats {
        iterations,
        halvings,
        resampled: solver.session().total_resampled(),
        restarts: solver.session().restarts(),
        objective: p.objective(&x),
        residual: equality_residual(p, &x),
        t,
    };
    Ok(LpSolution { y: x, multipliers, stats })
}
