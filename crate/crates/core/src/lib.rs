//! Prevalence-estimation bias of decision trees trained on imbalanced binary
//! data.
//!
//! The crate is organized around the pieces of the analysis:
//!
//! * [`dgp`] draws synthetic datasets (single positive, constant rate, and a
//!   logit model with interaction terms over ten predictors).
//! * [`tree`] is a from-scratch entropy classification tree with midpoint
//!   thresholds, exact prevalence integration over the unit cube and the
//!   Type 1-4 structural taxonomy.
//! * [`analytic`] holds the closed forms: expected positive-region size for a
//!   single positive case, the split-conditional expected prevalence, and the
//!   logistic intercept bias approximation.
//! * [`enumeration`] averages the split-conditional expected prevalence over
//!   every ordering of `m` positives among `n` observations.
//! * [`simulation`] runs the Monte Carlo studies with deterministic seeding.

pub mod analytic;
pub mod dgp;
pub mod enumeration;
mod error;
pub mod seed;
pub mod simulation;
pub mod summation;
pub mod tree;

pub use error::{Error, Result};
