use crate::error::{Error, Result};
use crate::matrix::{exact_leverage_scores, ConstraintMatrix, WeightVector};

/// Both stability notions cap the per-round change of log d at this value.
pub const STABILITY_BOUND: f64 = 0.1;

/// sqrt(sum_i w_i v_i^2).
pub fn weighted_norm(v: &[f64], w: &[f64]) -> f64 {
    v.iter().zip(w).map(|(x, s)| s * x * x).sum::<f64>().sqrt()
}

pub fn log_change(prev: &[f64], next: &[f64]) -> Result<Vec<f64>> {
    if prev.len() != next.len() {
        return Err(Error::DimensionMismatch("weight vectors of different length".into()));
    }
    if let Some(i) = prev.iter().chain(next).position(|&x| !(x > 0.0)) {
        return Err(Error::NonPositiveWeights(i % prev.len().max(1)));
    }
    Ok(prev.iter().zip(next).map(|(p, q)| q.ln() - p.ln()).collect())
}

/// Checks ||ln d' - ln d||_2 <= 0.1.
pub fn check_l2(prev: &[f64], next: &[f64]) -> Result<()> {
    let delta = log_change(prev, next)?;
    let v = weighted_norm(&delta, &vec![1.0; delta.len()]);
    if v > STABILITY_BOUND {
        return Err(Error::StabilityViolation { norm: "l2", value: v, bound: STABILITY_BOUND });
    }
    Ok(())
}

/// Checks the sigma-weighted and sup norms of ln d' - ln d against 0.1.
pub fn check_sigma(prev: &[f64], next: &[f64], sigma: &[f64]) -> Result<()> {
    let delta = log_change(prev, next)?;
    let v = weighted_norm(&delta, sigma);
    if v > STABILITY_BOUND {
        return Err(Error::StabilityViolation { norm: "sigma", value: v, bound: STABILITY_BOUND });
    }
    let inf = delta.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if inf > STABILITY_BOUND {
        return Err(Error::StabilityViolation { norm: "inf", value: inf, bound: STABILITY_BOUND });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityReport {
    /// ||ln x - ln y||_inf.
    pub eps: f64,
    /// ||ln sigma(x) - ln sigma(y)||_{sigma(x)}.
    pub lhs: f64,
    /// e^eps ||ln x - ln y||_{sigma(x)}.
    pub rhs: f64,
}

impl StabilityReport {
    /// lhs / rhs; at most 1 when the continuity bound holds.
    pub fn ratio(&self) -> f64 {
        if self.rhs == 0.0 {
            if self.lhs == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            self.lhs / self.rhs
        }
    }

    pub fn holds(&self) -> bool {
        self.lhs <= self.rhs * (1.0 + 1e-9) + 1e-12
    }
}

/// Both sides of the leverage score continuity bound, with exact scores.
pub fn leverage_stability_check(a: &ConstraintMatrix, x: &WeightVector, y: &WeightVector) -> Result<StabilityReport> {
    let delta = log_change(x.as_slice(), y.as_slice())?;
    let sx = exact_leverage_scores(a, x)?;
    let sy = exact_leverage_scores(a, y)?;
    let dl: Vec<f64> = sx.iter().zip(&sy).map(|(p, q)| q.ln() - p.ln()).collect();
    let eps = delta.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(StabilityReport { eps, lhs: weighted_norm(&dl, &sx), rhs: eps.exp() * weighted_norm(&delta, &sx) })
}
