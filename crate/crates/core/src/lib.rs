//! Approximate inverse maintenance for matrices of the form A^T D A whose
//! weights D drift from round to round, together with the interior-point
//! solvers built on top of it: linear programs, l1 and l-infinity
//! regression, analytic centers and ellipsoidal rounding, and flow LPs.
//!
//! The entry point for repeated solves is [`maintenance::MaintenanceSession`].
//! Every solver is exposed as a [`solver::SolverHandle`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod low_rank;
pub mod lp;
pub mod maintenance;
pub mod matrix;
pub mod noisy;
pub mod rng;
pub mod sketch;
pub mod solver;
pub mod stats;

pub use error::{Error, Result};
