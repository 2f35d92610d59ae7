//! Low-rank update machinery: the Woodbury identity, incremental tracking
//! of X A B^T Y products, an explicit inverse maintainer for few-coordinate
//! changes, and the split maintainer that also admits rows outside the
//! initial support.

mod explicit;
mod split;
mod telemetry;
mod tracker;
mod woodbury;

pub use explicit::{ExplicitInverse, ExplicitInverseState};
pub use split::{Compression, SplitConfig, SplitInverse, SplitMaintainerState};
pub use telemetry::Telemetry;
pub use tracker::{ProductTracker, Rows, SparseVec};
pub use woodbury::woodbury_inverse_apply;
