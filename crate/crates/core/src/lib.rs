//! Transfer activity labels from a labeled source sensor domain to an
//! unlabeled target domain.
//!
//! The pipeline builds a mutual k-NN network graph over windowed sensor
//! features ([`netgraph`]), finds core clusters by greedy modularity
//! agglomeration followed by cut-based merging ([`cci`]), abstracts each
//! domain into a weighted directed dependency graph ([`depgraph`]), and
//! maps target clusters onto source classes with a two-tier minimum-cost
//! assignment ([`matching`]). [`classify`] trains a shallow target model on
//! the transferred labels and [`pipeline`] wires everything together.

// `!(x > 0.0)` is used on purpose so NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cci;
pub mod classify;
pub mod depgraph;
pub mod error;
pub mod ingest;
pub mod matching;
pub mod netgraph;
pub mod pipeline;

mod matrix;

pub use error::{Error, Result};
pub use matrix::Matrix;
