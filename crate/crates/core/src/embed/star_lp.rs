//! Isometric embeddings of stars into `L_p`.
//!
//! Leaves are functions on `{0,1}^n` with a product measure, the root is zero.
//! For `p <= 2`, leaf `i` is `delta^(-1/p)` on atoms with bit `i` set (`delta = 1 - tau^p/2`);
//! for `p > 2`, leaf `i` is `+1` or `-1` according to bit `i`, with `delta(1 - delta)` fixed by `tau`.

use super::vector::{EmbedMode, VectorEmbedding};
use crate::error::{param, Result};
use crate::metric::TOL;

/// Largest number of leaves embedded by enumerating atoms.
pub const MAX_LEAVES: usize = 15;

/// Largest leaf distance of a star that embeds isometrically into `L_p`.
pub fn star_tau_max(p: f64) -> f64 {
    if p <= 2.0 {
        2f64.powf(1.0 / p)
    } else {
        2f64.powf(1.0 - 1.0 / p)
    }
}

pub fn star_to_lp(n: usize, tau: f64, p: f64) -> Result<VectorEmbedding> {
    if !(p >= 1.0) {
        return param(format!("p must be >= 1, got {p}"));
    }
    if !(tau > 0.0 && tau <= star_tau_max(p) + TOL) {
        return param(format!("tau = {tau} outside (0, {}] for p = {p}", star_tau_max(p)));
    }
    if n > MAX_LEAVES {
        return param(format!("at most {MAX_LEAVES} leaves, got {n}"));
    }
    let tau = tau.min(star_tau_max(p));
    let delta = if p <= 2.0 {
        (1.0 - tau.powf(p) / 2.0).max(0.0)
    } else {
        let c = (tau / 2f64.powf(1.0 + 1.0 / p)).powf(p);
        (1.0 - (1.0 - 4.0 * c).max(0.0).sqrt()) / 2.0
    };
    if p <= 2.0 && delta == 0.0 {
        let mut vectors = vec![vec![0.0; n]];
        vectors.extend((0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()));
        return VectorEmbedding::new(p, EmbedMode::Exact, vectors, None);
    }
    let atoms = 1usize << n;
    let weights: Vec<f64> = (0..atoms)
        .map(|a| {
            let k = a.count_ones() as i32;
            delta.powi(k) * (1.0 - delta).powi(n as i32 - k)
        })
        .collect();
    let mut vectors = vec![vec![0.0; atoms]];
    for i in 0..n {
        vectors.push(
            (0..atoms)
                .map(|a| {
                    let bit = a >> i & 1 == 1;
                    match (p <= 2.0, bit) {
                        (true, true) => delta.powf(-1.0 / p),
                        (true, false) => 0.0,
                        (false, true) => 1.0,
                        (false, false) => -1.0,
                    }
                })
                .collect(),
        );
    }
    VectorEmbedding::new(p, EmbedMode::Exact, vectors, Some(weights))
}
