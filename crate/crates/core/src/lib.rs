//! Quotients of finite metric spaces.
//!
//! Points are indices `0..n`. Every construction returns its output together with a
//! measured certificate (a [`quotient::DistortionReport`] against an explicit model space),
//! so callers never have to trust a bound they cannot check.

// Parameter checks are written as `!(x > 0.0)` so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod constructions;
pub mod cube;
pub mod embed;
pub mod error;
pub mod generators;
pub mod hst;
pub mod lipschitz;
pub mod metric;
pub mod quotient;
pub mod rng;

pub use error::{MetriqError, Result};
pub use metric::{FiniteMetric, MetricSpace, SpecialMetric, TOL};
pub use quotient::{DistortionReport, Provenance, QuotientSpace};
pub use rng::Seed;
