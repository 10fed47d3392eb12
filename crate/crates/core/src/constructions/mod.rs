//! Randomized quotient constructions.
//!
//! Each construction resamples until its acceptance event holds, up to [`MAX_ATTEMPTS`],
//! and then checks its own output against an explicit model space before returning it.

pub mod aspect;
pub mod coloring;
pub mod composition;
pub mod dichotomy;
pub mod mcenter;
pub mod star;
pub mod ts;

use crate::rng::Seed;
use serde::{Deserialize, Serialize};

/// Resampling budget for every rejection loop.
pub const MAX_ATTEMPTS: usize = 64;

/// Summary emitted by every construction run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub op: String,
    pub seed: Seed,
    pub input_size: usize,
    pub output_size: usize,
    pub attempts: usize,
    pub distortion: Option<f64>,
    pub bound: Option<f64>,
    #[serde(default)]
    pub notes: Vec<String>,
}

impl RunRecord {
    pub fn new(op: &str, seed: Seed, input_size: usize) -> Self {
        RunRecord { op: op.into(), seed, input_size, output_size: 0, attempts: 0, distortion: None, bound: None, notes: Vec::new() }
    }
}
