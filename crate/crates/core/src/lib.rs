//! Finite metric spaces, Hölder embeddings into ℓq, nets and chains, and
//! the bookkeeping behind reducing countable ℓp-sums of metric spaces to
//! ℓq-sums.
//!
//! Metrics are dense symmetric matrices with string labels. Embeddings map
//! point indices to coordinates in ℓq^k. The [`reduction`] module checks
//! the per-level clauses of an instance and the partial-sum inequalities on
//! chosen product points; [`reduction::simulate`] samples points whose
//! distance sequences follow a tail model.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod cli;
pub mod embedding;
pub mod error;
pub mod generate;
pub mod metric;
pub mod nets;
pub mod reduction;

pub use embedding::{Embedding, Level};
pub use error::{Error, Result};
pub use metric::{validate_metric, FiniteMetricSpace, MetricReport};
