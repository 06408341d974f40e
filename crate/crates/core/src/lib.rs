//! Stochastic separation in high dimension.
//!
//! Random i.i.d. points drawn from a high-dimensional ball, cube, or similar
//! regular distribution are, with overwhelming probability, each linearly
//! separable from all the others, even when the sample is exponentially large
//! in the dimension. This crate turns that statement into something you can
//! compute with:
//!
//! * [`sampling`] draws seeded, reproducible point ensembles (ball, sphere,
//!   product distributions in the unit cube, diagonal gaussians).
//! * [`bounds`] evaluates the closed-form probability lower bounds and
//!   cardinality caps, with log-space paths for the regimes where the power
//!   terms under- or overflow.
//! * [`separability`] runs Monte Carlo trials of each separation event and
//!   compares the empirical frequency against the bound with a 99% Wilson
//!   interval.
//! * [`corrector`] builds one-shot linear correctors for a legacy classifier:
//!   centering, PCA projection, whitening, error clustering and one Fisher
//!   discriminant per cluster, with JSON persistence and cascading.
//! * [`numerics`] holds the dense symmetric linear algebra the corrector needs.
//!
//! The `sepkit` binary wraps all of the above for file-based batch use; see
//! [`cli`].

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod cli;
pub mod corrector;
mod error;
pub mod numerics;
pub mod pointset;
pub mod rng;
pub mod sampling;
pub mod separability;
pub mod stats;

pub use error::{Error, Result};
pub use pointset::PointSet;

/// Version tag embedded in every JSON document this crate writes.
pub const VERSION: &str = concat!("sepkit ", env!("CARGO_PKG_VERSION"));
