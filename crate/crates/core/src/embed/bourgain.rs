//! Random-subset (Frechet) embeddings of spaces with an m-center.

use super::vector::{EmbedMode, VectorEmbedding};
use crate::constructions::mcenter::find_m_center;
use crate::error::{param, MetriqError, Result};
use crate::metric::{FiniteMetric, MetricSpace};
use crate::quotient::{distortion_identity, DistortionReport};
use crate::rng::Seed;
use rand::Rng;
use serde::Serialize;

/// Largest space embedded by exact enumeration of all subsets.
pub const EXACT_LIMIT: usize = 15;

/// Subsets sampled per scale in Monte Carlo mode, per unit of the scale count.
pub const SAMPLES_PER_SCALE: usize = 256;

#[derive(Clone, Debug, Serialize)]
pub struct BourgainResult {
    pub embedding: VectorEmbedding,
    pub certificate: DistortionReport,
    /// Number of scales `ceil(ln m / p)`.
    pub scales: usize,
    /// Distortion bound `96 * scales`.
    pub bound: f64,
    pub center: usize,
}

pub fn scale_count(mparam: f64, p: f64) -> usize {
    ((mparam.ln() / p).ceil() as usize).max(1)
}

/// Non-expanding embedding into `L_p` with distortion at most `96 ceil(ln m / p)`.
///
/// Coordinates are `d(x, A)` for subsets `A`, with `A` weighted by the average over scales
/// `i = 1..q` of the probability that independent inclusion at rate `e^(-p i)` yields `A`.
pub fn bourgain_embed(m: &MetricSpace, mparam: f64, p: f64, mode: Option<EmbedMode>, seed: Seed) -> Result<BourgainResult> {
    if !(p >= 1.0) {
        return param(format!("p must be >= 1, got {p}"));
    }
    let n = m.len();
    if n == 0 {
        return param("empty space");
    }
    let center = find_m_center(m, mparam).ok_or_else(|| MetriqError::Parameter(format!("space has no {mparam}-center")))?;
    let q = scale_count(mparam, p);
    let mode = mode.unwrap_or(if n <= EXACT_LIMIT { EmbedMode::Exact } else { EmbedMode::MonteCarlo });
    let embedding = match mode {
        EmbedMode::Exact => exact(m, q, p)?,
        EmbedMode::MonteCarlo => sampled(m, q, p, seed),
    };
    let certificate = distortion_identity(m, &embedding)?;
    Ok(BourgainResult { embedding, certificate, scales: q, bound: 96.0 * q as f64, center })
}

fn exact(m: &MetricSpace, q: usize, p: f64) -> Result<VectorEmbedding> {
    let n = m.len();
    if n > EXACT_LIMIT {
        return param(format!("exact mode handles at most {EXACT_LIMIT} points, got {n}"));
    }
    let subsets = (1usize << n) - 1;
    let mut weights = vec![0.0; subsets];
    for (idx, w) in weights.iter_mut().enumerate() {
        let size = (idx + 1).count_ones() as i32;
        *w = (1..=q)
            .map(|i| {
                let rho = (-p * i as f64).exp();
                rho.powi(size) * (1.0 - rho).powi(n as i32 - size)
            })
            .sum::<f64>()
            / q as f64;
    }
    let vectors = (0..n)
        .map(|x| {
            let mut to = vec![f64::INFINITY; subsets + 1];
            for mask in 1..=subsets {
                let low = mask.trailing_zeros() as usize;
                to[mask] = to[mask & (mask - 1)].min(m.dist(x, low));
            }
            to.split_off(1)
        })
        .collect();
    VectorEmbedding::new(p, EmbedMode::Exact, vectors, Some(weights))
}

fn sampled(m: &MetricSpace, q: usize, p: f64, seed: Seed) -> VectorEmbedding {
    let n = m.len();
    let per = SAMPLES_PER_SCALE * q;
    let mut rng = seed.rng();
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(q * per);
    for i in 1..=q {
        let rho = (-p * i as f64).exp();
        for _ in 0..per {
            let set = loop {
                let s: Vec<usize> = (0..n).filter(|_| rng.random_bool(rho)).collect();
                if !s.is_empty() {
                    break s;
                }
            };
            cols.push((0..n).map(|x| set.iter().map(|&a| m.dist(x, a)).fold(f64::INFINITY, f64::min)).collect());
        }
    }
    let vectors = (0..n).map(|x| cols.iter().map(|c| c[x]).collect()).collect();
    let weights = vec![1.0 / cols.len() as f64; cols.len()];
    VectorEmbedding::new(p, EmbedMode::MonteCarlo, vectors, Some(weights)).expect("consistent shapes")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{realize_special, SpecialMetric};

    #[test]
    fn exact_star_embedding() {
        let m = realize_special(&SpecialMetric::Star { n: 6, tau: 2.0 }).unwrap();
        for p in [1.0, 2.0] {
            let r = bourgain_embed(&m, 2.0, p, None, Seed::new(0)).unwrap();
            assert_eq!(r.embedding.mode, EmbedMode::Exact);
            assert!(r.certificate.non_expanding());
            assert!(r.certificate.distortion <= r.bound);
        }
    }

    #[test]
    fn sampled_mode_is_non_expanding() {
        let m = realize_special(&SpecialMetric::Star { n: 20, tau: 1.5 }).unwrap();
        let r = bourgain_embed(&m, 2.0, 2.0, None, Seed::new(1)).unwrap();
        assert_eq!(r.embedding.mode, EmbedMode::MonteCarlo);
        assert!(r.certificate.non_expanding());
    }

    #[test]
    fn rejects_spaces_without_center() {
        let line = MetricSpace::from_fn(8, |i, j| (i as f64 - j as f64).abs());
        assert!(bourgain_embed(&line, 2.0, 1.0, None, Seed::new(0)).is_err());
    }
}
