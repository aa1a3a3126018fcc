//! Collaborative ranking engine.
//!
//! - [`data`]: sparse ratings, splits, pairwise comparisons, synthetic data
//! - [`bloom`]: Bloom filters and the Graph DNA multi-hop encoding
//! - [`mf`]: pointwise matrix factorization with graph information
//! - [`primal_cr`]: pairwise L2-hinge ranking with truncated Newton
//! - [`sql_rank`]: listwise ranking with the stochastic queuing process
//! - [`metrics`]: ranking and rating evaluation
//! - [`bench`]: kernel timing grid with log-log slope fits

pub mod bench;
pub mod bloom;
pub mod config;
pub mod data;
pub mod error;
pub mod graph;
pub mod matrix;
pub mod fenwick;
pub mod metrics;
pub mod mf;
pub mod model;
mod par;
pub mod primal_cr;
pub mod rng;
pub mod sql_rank;

pub use error::{Error, Result};
