//! Phased lattice trajectories, ensemble coherence and path-sum propagation
//! on a 1D space-time lattice.

// `!(x > 0.0)` is used on purpose so that NaN fails validation too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod action;
pub mod cli;
pub mod ensemble;
pub mod error;
pub mod experiments;
pub mod lattice;
pub mod propagators;
pub mod stats;

pub use error::{Error, Result};
