//! Random split `S` and the set `T` of points outside `S` whose nearest neighbour lies in `S`.

use super::MAX_ATTEMPTS;
use crate::error::{param, MetriqError, Result};
use crate::metric::{nearest_radii, point_set_distance, FiniteMetric};
use crate::rng::Seed;
use rand::Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TsSets {
    pub s: Vec<usize>,
    pub t: Vec<usize>,
    pub attempts: usize,
}

/// Resamples `S` (each point with probability 1/2) until `|T| >= n/4`.
///
/// For every `A` containing the complement of `T`, the quotient by `A` satisfies
/// `d(x, y) = min{d(x, y), r(x) + r(y)}` and `d(x, A) = r(x)` on `T`.
pub fn ts_sets(m: &impl FiniteMetric, seed: Seed) -> Result<TsSets> {
    let n = m.len();
    if n < 2 {
        return param("need at least two points");
    }
    let r = nearest_radii(m);
    let mut rng = seed.rng();
    let mut best = 0;
    for attempt in 1..=MAX_ATTEMPTS {
        let in_s: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        let s: Vec<usize> = (0..n).filter(|&x| in_s[x]).collect();
        if s.is_empty() {
            continue;
        }
        let t: Vec<usize> = (0..n).filter(|&x| !in_s[x] && point_set_distance(m, x, &s) == r[x]).collect();
        best = best.max(t.len());
        if 4 * t.len() >= n {
            return Ok(TsSets { s, t, attempts: attempt });
        }
    }
    Err(MetriqError::ProbabilisticFailure { what: "ts_sets", attempts: MAX_ATTEMPTS, detail: format!("largest T had {best} of {n} points") })
}
