use crate::error::{Error, Result};
use crate::matrix::ConstraintMatrix;
use crate::rng::{rng_from, Gaussian};
use nalgebra::DMatrix;
use rand::seq::index::sample;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmbeddingKind {
    /// s nonzeros of +-1/sqrt(s) per column, in distinct rows.
    #[default]
    Sparse,
    /// Dense N(0, 1/r) entries.
    DenseGaussian,
}

/// A random r x m matrix that approximately preserves the norms of every
/// vector in a fixed subspace of bounded rank.
#[derive(Debug, Clone)]
pub struct SubspaceEmbedding {
    rows: usize,
    cols: usize,
    s: usize,
    positions: Vec<u32>,
    signs: Vec<f64>,
    dense: Option<DMatrix<f64>>,
}

/// Row-count constant used by [`embed`] and the split maintainer.
pub const DEFAULT_C_EMBED: f64 = 8.0;

/// Number of rows needed for rank `rank` at distortion `eps`.
pub fn embedding_rows(rank: usize, eps: f64, c_embed: f64) -> usize {
    let k = rank as f64;
    (c_embed * k * (k + 1.0).ln() / (eps * eps)).ceil().max(1.0) as usize
}

/// Nonzeros per column for rank `rank`.
pub fn embedding_sparsity(rank: usize) -> usize {
    ((rank as f64 + 1.0).log2().ceil() as usize).max(1)
}

impl SubspaceEmbedding {
    pub fn new(rank: usize, cols: usize, eps: f64, c_embed: f64, kind: EmbeddingKind, seed: u64) -> Result<Self> {
        if rank == 0 || !(eps > 0.0 && eps < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "embedding needs rank >= 1 and eps in (0, 1), got {rank}, {eps}"
            )));
        }
        let rows = embedding_rows(rank, eps, c_embed);
        let s = embedding_sparsity(rank).min(rows);
        let mut rng = rng_from(seed, &[0xe3b, rows as u64, cols as u64]);
        match kind {
            EmbeddingKind::Sparse => {
                let mut positions = Vec::with_capacity(cols * s);
                let mut signs = Vec::with_capacity(cols * s);
                let v = 1.0 / (s as f64).sqrt();
                for _ in 0..cols {
                    for p in sample(&mut rng, rows, s).iter() {
                        positions.push(p as u32);
                    }
                    let bits = rand::RngCore::next_u64(&mut rng);
                    for k in 0..s {
                        signs.push(if (bits >> (k % 64)) & 1 == 1 { v } else { -v });
                    }
                }
                Ok(SubspaceEmbedding { rows, cols, s, positions, signs, dense: None })
            }
            EmbeddingKind::DenseGaussian => {
                let mut g = Gaussian::new(rng);
                let scale = 1.0 / (rows as f64).sqrt();
                let m = DMatrix::from_fn(rows, cols, |_, _| g.sample() * scale);
                Ok(SubspaceEmbedding { rows, cols, s: rows, positions: vec![], signs: vec![], dense: Some(m) })
            }
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Nonzeros per column.
    pub fn sparsity(&self) -> usize {
        self.s
    }

    /// Add `alpha * x` to `out` at the rows of column `j`.
    fn scatter(&self, j: usize, alpha: f64, x: &[f64], out: &mut DMatrix<f64>) {
        if let Some(m) = &self.dense {
            for r in 0..self.rows {
                let c = alpha * m[(r, j)];
                for (k, &xv) in x.iter().enumerate() {
                    out[(r, k)] += c * xv;
                }
            }
            return;
        }
        for t in 0..self.s {
            let r = self.positions[j * self.s + t] as usize;
            let c = alpha * self.signs[j * self.s + t];
            for (k, &xv) in x.iter().enumerate() {
                out[(r, k)] += c * xv;
            }
        }
    }

    /// Pi diag(scale) A_rows, where column `k` of Pi multiplies row
    /// `row_ids[k]` of `a`.
    pub fn apply_rows(&self, a: &ConstraintMatrix, row_ids: &[usize], scale: &[f64]) -> DMatrix<f64> {
        assert_eq!(row_ids.len(), self.cols);
        let mut out = DMatrix::zeros(self.rows, a.ncols());
        let mut buf = vec![0.0; a.ncols()];
        for (k, &i) in row_ids.iter().enumerate() {
            let sc = scale[k];
            if sc == 0.0 {
                continue;
            }
            let (c, x) = a.row(i);
            if self.dense.is_none() {
                for t in 0..self.s {
                    let r = self.positions[k * self.s + t] as usize;
                    let sg = sc * self.signs[k * self.s + t];
                    for (&j, &v) in c.iter().zip(x) {
                        out[(r, j)] += sg * v;
                    }
                }
            } else {
                buf.iter_mut().for_each(|b| *b = 0.0);
                for (&j, &v) in c.iter().zip(x) {
                    buf[j] = v;
                }
                self.scatter(k, sc, &buf, &mut out);
            }
        }
        out
    }

    /// Pi restricted to the listed columns, applied to `m` whose rows
    /// correspond to those columns.
    pub fn apply_columns(&self, col_ids: &[usize], m: &DMatrix<f64>) -> DMatrix<f64> {
        assert_eq!(col_ids.len(), m.nrows());
        let mut out = DMatrix::zeros(self.rows, m.ncols());
        let mut row = vec![0.0; m.ncols()];
        for (k, &j) in col_ids.iter().enumerate() {
            for (c, r) in row.iter_mut().enumerate() {
                *r = m[(k, c)];
            }
            self.scatter(j, 1.0, &row, &mut out);
        }
        out
    }

    /// Pi m for an m with `cols` rows.
    pub fn apply_dense(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let ids: Vec<usize> = (0..self.cols).collect();
        self.apply_columns(&ids, m)
    }
}

/// Pi A for a fresh sparse embedding sized for the column rank of `a`.
pub fn embed(a: &ConstraintMatrix, eps: f64, seed: u64) -> Result<DMatrix<f64>> {
    let pi = SubspaceEmbedding::new(a.ncols(), a.nrows(), eps, DEFAULT_C_EMBED, EmbeddingKind::Sparse, seed)?;
    let ids: Vec<usize> = (0..a.nrows()).collect();
    Ok(pi.apply_rows(a, &ids, &vec![1.0; a.nrows()]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{gram_product, spectral_close, PdMatrix, WeightVector};

    fn stacked_identity() -> ConstraintMatrix {
        let t: Vec<_> = (0..8).map(|i| (i, i, 1.0)).collect();
        ConstraintMatrix::from_triplets(32, 8, &t).unwrap()
    }

    #[test]
    fn dimensions_follow_rank() {
        assert_eq!(embedding_rows(8, 0.5, 2.0), (2.0 * 8.0 * 9f64.ln() / 0.25).ceil() as usize);
        assert_eq!(embedding_sparsity(8), 4);
        assert_eq!(embedding_sparsity(1), 1);
        let pi = SubspaceEmbedding::new(8, 32, 0.5, 2.0, EmbeddingKind::Sparse, 1).unwrap();
        assert_eq!(pi.cols(), 32);
        for j in 0..32 {
            let mut p: Vec<_> = pi.positions[j * 4..j * 4 + 4].to_vec();
            p.sort();
            p.dedup();
            assert_eq!(p.len(), 4);
        }
    }

    #[test]
    fn columns_have_unit_norm() {
        let a = stacked_identity();
        let e = embed(&a, 0.5, 3).unwrap();
        let g = e.transpose() * &e;
        for i in 0..8 {
            assert!((g[(i, i)] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_variant_embeds() {
        let a = stacked_identity();
        let pi = SubspaceEmbedding::new(8, 32, 0.5, 2.0, EmbeddingKind::DenseGaussian, 5).unwrap();
        let ids: Vec<usize> = (0..32).collect();
        let e = pi.apply_rows(&a, &ids, &[1.0; 32]);
        let g = PdMatrix::new(e.transpose() * &e).unwrap();
        let exact = gram_product(&a, &WeightVector::ones(32)).unwrap();
        assert!(spectral_close(&g, &exact, 0.5).unwrap().close);
    }
}
