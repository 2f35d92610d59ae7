use crate::error::{Error, Result};
use crate::matrix::{gram_product, ConstraintMatrix, PdMatrix, WeightVector};
use crate::rng::rng_from;
use rand::Rng;

/// Row-sampled reweighting h of d with A^T H A close to A^T D A.
#[derive(Debug, Clone, PartialEq)]
pub struct Sparsifier {
    /// New weights, d_i / p_i on kept rows and 0 elsewhere.
    pub h: Vec<f64>,
    pub p: Vec<f64>,
    pub kept: usize,
}

impl Sparsifier {
    pub fn weights(&self) -> WeightVector {
        WeightVector::new(self.h.clone()).expect("sampled weights are nonnegative")
    }

    pub fn gram(&self, a: &ConstraintMatrix) -> Result<PdMatrix> {
        gram_product(a, &self.weights())
    }
}

/// p = min(1, c_s eps^-2 u ln n), with ln n floored at 1.
pub fn sampling_probability(u: f64, eps: f64, n: usize, c_s: f64) -> f64 {
    let ln = (n as f64).ln().max(1.0);
    (c_s * u * ln / (eps * eps)).min(1.0)
}

/// Keep row i with probability p_i computed from the overestimates `u` of
/// its leverage score.
pub fn sample_sparsifier(
    a: &ConstraintMatrix,
    d: &WeightVector,
    u: &[f64],
    eps: f64,
    seed: u64,
    c_s: f64,
) -> Result<Sparsifier> {
    let n = a.nrows();
    if d.len() != n || u.len() != n {
        return Err(Error::DimensionMismatch("sparsifier inputs".into()));
    }
    if !(eps > 0.0) || !(c_s > 0.0) {
        return Err(Error::InvalidArgument("eps and c_s must be positive".into()));
    }
    let mut rng = rng_from(seed, &[0x5a3]);
    let mut h = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut kept = 0;
    for i in 0..n {
        let pi = sampling_probability(u[i].max(0.0), eps, n, c_s);
        p[i] = pi;
        let draw: f64 = rng.random();
        if d[i] > 0.0 && draw < pi {
            h[i] = d[i] / pi;
            kept += 1;
        }
    }
    Ok(Sparsifier { h, p, kept })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn probability_saturates() {
        assert_eq!(sampling_probability(0.5, 0.5, 100, 4.0), 1.0);
        let small = sampling_probability(1e-4, 0.5, 100, 4.0);
        assert!((small - 4.0 * 1e-4 * 100f64.ln() / 0.25).abs() < 1e-15);
    }

    #[test]
    fn certain_rows_keep_their_weight() {
        let a = ConstraintMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]]).unwrap();
        let d = WeightVector::new(vec![1.0, 2.0, 3.0]).unwrap();
        let s = sample_sparsifier(&a, &d, &[1.0; 3], 0.5, 1, 4.0).unwrap();
        assert_eq!(s.h, vec![1.0, 2.0, 3.0]);
        assert_eq!(s.kept, 3);
    }
}
