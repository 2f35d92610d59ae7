//! Random instances and sigma-stable weight trajectories for benchmarks.

use super::stability::weighted_norm;
use crate::error::{Error, Result};
use crate::matrix::{exact_leverage_scores, ConstraintMatrix, WeightVector};
use crate::rng::{rng_from, Gaussian, SeededRng};
use rand::seq::index::sample;
use rand::Rng;
use std::sync::Arc;

/// n x d matrix with `per_row` Gaussian entries in random columns per row.
pub fn sparse_instance(n: usize, d: usize, per_row: usize, seed: u64) -> Result<ConstraintMatrix> {
    if per_row == 0 || per_row > d || d > n {
        return Err(Error::InvalidArgument(format!("cannot build {n}x{d} with {per_row} entries per row")));
    }
    let mut g = Gaussian::new(rng_from(seed, &[0x1a5]));
    let mut trip = Vec::with_capacity(n * per_row);
    for i in 0..n {
        let cols = sample(g.rng_mut(), d, per_row);
        for j in cols.iter() {
            trip.push((i, j, g.sample()));
        }
    }
    ConstraintMatrix::from_triplets(n, d, &trip)
}

/// Weights whose log moves each round by a fixed random direction plus
/// fresh noise, scaled so that both the leverage-weighted norm and the sup
/// norm of the step equal `step` (0.09 by default).
pub struct SigmaDrift {
    a: Arc<ConstraintMatrix>,
    direction: Vec<f64>,
    noise: f64,
    step: f64,
    rng: Gaussian<SeededRng>,
    log_d: Vec<f64>,
}

impl SigmaDrift {
    pub fn new(a: Arc<ConstraintMatrix>, seed: u64) -> Self {
        let n = a.nrows();
        let mut rng = rng_from(seed, &[0xd71f]);
        let direction = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        SigmaDrift {
            a,
            direction,
            noise: 0.5,
            step: 0.09,
            rng: Gaussian::new(rng_from(seed, &[0xd71f, 1])),
            log_d: vec![0.0; n],
        }
    }

    pub fn with_step(mut self, step: f64) -> Self {
        self.step = step;
        self
    }

    pub fn current(&self) -> WeightVector {
        WeightVector::new(self.log_d.iter().map(|x| x.exp()).collect()).expect("positive weights")
    }

    pub fn next_weights(&mut self) -> Result<WeightVector> {
        let sigma = exact_leverage_scores(&self.a, &self.current())?;
        let v: Vec<f64> = self.direction.iter().map(|u| u + self.noise * self.rng.sample()).collect();
        let inf = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let scale = self.step / weighted_norm(&v, &sigma).max(inf);
        for (l, x) in self.log_d.iter_mut().zip(&v) {
            *l += scale * x;
        }
        Ok(self.current())
    }
}
