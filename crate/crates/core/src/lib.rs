//! Random correlation matrices sampled through partial-correlation vines,
//! together with the exact and asymptotic law of their determinant.
//!
//! The crate is organised bottom-up:
//!
//! * [`specfun`]: log-gamma, digamma, trigamma, log-beta, the regularized
//!   incomplete beta function and harmonic numbers.
//! * [`linalg`]: packed correlation matrices and Cholesky log-determinants.
//! * [`vine`]: the D-vine structure and the bijection between partial
//!   correlations and correlation matrices.
//! * [`sampler`]: seeded Beta variates, LKJ-style matrices and direct
//!   log-determinant samplers.
//! * [`moments`]: closed-form moments of the determinant and of its logarithm.
//! * [`stats`]: summaries, Kolmogorov-Smirnov tests and the CLT scaling.

// `!(x < bound)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod linalg;
pub mod moments;
pub mod sampler;
pub mod specfun;
pub mod stats;
pub mod vine;

pub use error::{Error, Result};
pub use linalg::{cholesky_log_det, is_positive_definite, CorrelationMatrix};
pub use moments::MomentReport;
pub use sampler::{BatchConfig, LogDetSample, ModelParams, Pathway, RngStream};
pub use stats::{CltRow, KsResult, SummaryStats};
pub use vine::{EdgeKey, PartialCorrSet, VineEdge, VineSpec};
