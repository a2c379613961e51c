//! Randomized integration on the unit cube with `(ε, δ)` confidence guarantees.
//!
//! The crate is split into five layers:
//!
//! - [`testfn`]: integrands with closed-form integrals and certified norm
//!   bounds (Hölder hats, polynomial bumps, signed fooling sums, the
//!   one-dimensional Frolov counterexample).
//! - [`estimators`]: plain Monte Carlo, stratified sampling, median
//!   amplification, control variates and the randomly dilated/shifted
//!   Frolov rule in one dimension.
//! - [`bounds`]: closed-form upper and lower error bounds plus exact
//!   big-integer verification of the binomial tail inequalities.
//! - [`harness`]: repeated trials, empirical failure probabilities with
//!   Clopper–Pearson intervals and log-log rate fits.
//! - [`rng`]: seeded, schedule-independent uniform streams.

// `!(x > 0.0)` guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod estimators;
pub mod harness;
pub mod rng;
pub mod stats;
pub mod testfn;

pub use error::{Error, Result};
pub use estimators::{Estimate, Estimator, EstimatorKind};
pub use rng::RandomSource;
pub use testfn::{Integrand, SmoothnessClass, TestFunction};
