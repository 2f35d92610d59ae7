//! Random sketches: sparse subspace embeddings, leverage score estimates
//! and leverage-score row sampling.

mod embedding;
mod leverage;
mod sparsifier;

pub use embedding::{embed, embedding_rows, embedding_sparsity, EmbeddingKind, SubspaceEmbedding, DEFAULT_C_EMBED};
pub use leverage::{estimate_leverage, LeverageConfig, LeverageEstimate};
pub use sparsifier::{sample_sparsifier, sampling_probability, Sparsifier};
