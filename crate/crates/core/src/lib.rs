//! Demographic inference on mobile phone call graphs.
//!
//! The crate covers the whole path from raw call and SMS records to age
//! predictions with per-stratum accuracy reports:
//!
//! - [`graph`]: symmetrized contact graph in CSR form, pruning of call
//!   centers and seedless components, SIN/DTS/degree metrics.
//! - [`features`]: the 45 per-user behavioral and social variables, log and
//!   min-max preprocessing, skewness summaries and PCA.
//! - [`stats`]: bootstrap means, Tukey HSD, gender mixing probabilities and
//!   age homophily matrices.
//! - [`classify`]: L1/L2 logistic and multinomial logistic regression with
//!   grid search.
//! - [`diffusion`]: reaction-diffusion label propagation over the graph.
//! - [`pps`]: Population Pyramid Scaling, a greedy quota-constrained
//!   collapse of probability vectors to hard labels.
//! - [`synth`]: synthetic populations, homophilous graphs and event streams.
//! - [`eval`] and [`pipeline`]: stratified accuracy reports and the
//!   reproducible end-to-end experiment driver behind the CLI.

// index loops mirror the matrix notation in numeric kernels
#![allow(clippy::needless_range_loop)]

pub mod classify;
pub mod cli;
pub mod diffusion;
pub mod error;
pub mod eval;
pub mod features;
pub mod graph;
pub mod labels;
pub mod pipeline;
pub mod pps;
pub mod rng;
pub mod stats;
pub mod synth;

pub use error::{Error, Result};
