//! Gaussian-smoothed maximum likelihood for one-dimensional location estimation.
//!
//! Given a known base density f and i.i.d. samples from f(x − λ), the crate
//! smooths f with N(0, r²), perturbs the samples with matching Gaussian noise
//! and solves for a root of the smoothed empirical score. It also provides
//! lower-bound diagnostics and the Monte Carlo harness used to compare
//! estimators.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod argmax;
pub mod distributions;
pub mod error;
pub mod estimators;
pub mod experiments;
pub mod fixtures;
pub mod invariants;
pub mod lowerbound;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod smoothing;
pub mod special;

mod components;
mod table;

pub use distributions::{Component, DistKind, Distribution, DistributionSpec};
pub use error::{Result, SmleError};
pub use fixtures::{make_fixture, FixtureSpec};
pub use model::{LocationModel, PointEval, RawModel};
pub use smoothing::{smooth, SmoothedModel};
