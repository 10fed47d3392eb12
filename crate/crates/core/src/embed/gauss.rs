//! Gaussian random-feature embeddings of Euclidean space that saturate at a fixed level.
//!
//! `F(x) = D exp(i <x, g> / D)` with `g` standard Gaussian has `|F(x)| = D` and
//! `|F(x) - F(y)| = sqrt(2) D sqrt(1 - exp(-|x - y|^2 / (2 D^2)))`.

use super::vector::{EmbedMode, VectorEmbedding};
use crate::error::{param, Result};
use crate::metric::{FiniteMetric, MetricSpace};
use crate::quotient::{distortion_identity, DistortionReport};
use crate::rng::Seed;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::Serialize;
use std::f64::consts::E;

pub fn truncated_gauss_distance(d: f64, level: f64) -> f64 {
    std::f64::consts::SQRT_2 * level * (-(-(d * d) / (2.0 * level * level)).exp_m1()).sqrt()
}

/// Distortion of `truncated_gauss_distance` against `min{d, D}`.
pub fn truncation_distortion_bound() -> f64 {
    (E / (E - 1.0)).sqrt()
}

/// Samples `features` Gaussian directions and returns the complex feature vectors.
pub fn truncated_gauss_embed(points: &[Vec<f64>], level: f64, features: usize, seed: Seed) -> Result<VectorEmbedding> {
    if !(level > 0.0) || features == 0 {
        return param("need a positive level and at least one feature");
    }
    let dim = points.first().map_or(0, |p| p.len());
    if points.iter().any(|p| p.len() != dim) {
        return param("points have different dimensions");
    }
    let mut rng = seed.rng();
    let g: Vec<f64> = (0..features * dim).map(|_| rng.sample(StandardNormal)).collect();
    let vectors = points
        .iter()
        .map(|x| {
            let mut v = Vec::with_capacity(2 * features);
            for f in 0..features {
                let t: f64 = (0..dim).map(|k| x[k] * g[f * dim + k]).sum::<f64>() / level;
                v.push(level * t.cos());
                v.push(level * t.sin());
            }
            v
        })
        .collect();
    VectorEmbedding::complex(2.0, EmbedMode::MonteCarlo, vectors, Some(vec![1.0 / features as f64; features]))
}

/// Distance map `d -> truncated_gauss_distance(sqrt(d), sqrt(D))` for spaces whose square-root
/// metric is Euclidean; within `sqrt(e D / (e - 1))` of `min{d, D}` when distances are at least 1.
#[derive(Clone, Copy, Debug)]
pub struct SnowflakeTransform {
    pub level: f64,
}

impl SnowflakeTransform {
    pub fn new(level: f64) -> Result<Self> {
        if !(level >= 1.0) {
            return param(format!("level must be at least 1, got {level}"));
        }
        Ok(SnowflakeTransform { level })
    }

    pub fn apply(&self, d: f64) -> f64 {
        truncated_gauss_distance(d.sqrt(), self.level.sqrt())
    }

    pub fn bound(&self) -> f64 {
        (E * self.level / (E - 1.0)).sqrt()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct SnowflakeResult {
    pub metric: MetricSpace,
    /// Against `min{d, D}`.
    pub certificate: DistortionReport,
    pub bound: f64,
}

/// Applies the transform to a space with minimum distance at least 1.
///
/// The caller asserts that `sqrt(d)` is Euclidean (as for Hamming cubes); the closed form is
/// exactly the distance of the feature map on such a realization.
pub fn snowflake_sqrt_embed(m: &MetricSpace, level: f64) -> Result<SnowflakeResult> {
    let t = SnowflakeTransform::new(level)?;
    if m.min_distance().is_some_and(|d| d < 1.0) {
        return param("minimum distance must be at least 1");
    }
    let metric = MetricSpace::from_fn(m.len(), |i, j| t.apply(m.dist(i, j)));
    let truncated = MetricSpace::from_fn(m.len(), |i, j| m.dist(i, j).min(level));
    let certificate = distortion_identity(&truncated, &metric)?;
    Ok(SnowflakeResult { metric, certificate, bound: t.bound() })
}

/// Lower bound `2 sqrt(5 - sqrt 7) / 3` on the Euclidean distortion of truncated Euclidean space.
pub fn truncation_witness_bound() -> f64 {
    2.0 * (5.0 - 7f64.sqrt()).sqrt() / 3.0
}

/// Four points `(0,0), (D,0), (D/2,D), (D/2,0)` under `min{|x - y|, D}`.
pub fn truncation_witness(level: f64) -> MetricSpace {
    let pts = [(0.0, 0.0), (level, 0.0), (level / 2.0, level), (level / 2.0, 0.0)];
    MetricSpace::from_fn(4, |i, j| {
        let (a, b) = (pts[i], pts[j]);
        (a.0 - b.0).hypot(a.1 - b.1).min(level)
    })
}

fn placement_distortion(m: &MetricSpace, x: &[f64], dim: usize) -> f64 {
    let n = m.len();
    let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
    for i in 0..n {
        for j in i + 1..n {
            let e: f64 = (0..dim).map(|k| (x[i * dim + k] - x[j * dim + k]).powi(2)).sum::<f64>().sqrt();
            let r = e / m.dist(i, j);
            hi = hi.max(r);
            lo = lo.min(r);
        }
    }
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

/// Smallest distortion found by Nelder-Mead over placements of the witness in `R^3`.
pub fn witness_search(restarts: usize, seed: Seed) -> f64 {
    let m = truncation_witness(1.0);
    let dim = 3;
    let len = m.len() * dim;
    let mut rng = seed.rng();
    let mut best = f64::INFINITY;
    for _ in 0..restarts {
        let start: Vec<f64> = (0..len).map(|_| rng.random::<f64>()).collect();
        best = best.min(nelder_mead(|x| placement_distortion(&m, x, dim), start, 4000));
    }
    best
}

fn nelder_mead(f: impl Fn(&[f64]) -> f64, start: Vec<f64>, iters: usize) -> f64 {
    let n = start.len();
    let mut simplex: Vec<(Vec<f64>, f64)> = (0..=n)
        .map(|i| {
            let mut x = start.clone();
            if i > 0 {
                x[i - 1] += 0.3;
            }
            let v = f(&x);
            (x, v)
        })
        .collect();
    let lerp = |a: &[f64], b: &[f64], t: f64| -> Vec<f64> { a.iter().zip(b).map(|(x, y)| x + t * (y - x)).collect() };
    for _ in 0..iters {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let mut centroid = vec![0.0; n];
        for (x, _) in &simplex[..n] {
            centroid.iter_mut().zip(x).for_each(|(c, v)| *c += v / n as f64);
        }
        let worst = simplex[n].clone();
        let refl = lerp(&centroid, &worst.0, -1.0);
        let fr = f(&refl);
        if fr < simplex[0].1 {
            let exp = lerp(&centroid, &worst.0, -2.0);
            let fe = f(&exp);
            simplex[n] = if fe < fr { (exp, fe) } else { (refl, fr) };
        } else if fr < simplex[n - 1].1 {
            simplex[n] = (refl, fr);
        } else {
            let con = lerp(&centroid, &worst.0, 0.5);
            let fc = f(&con);
            if fc < worst.1 {
                simplex[n] = (con, fc);
            } else {
                let b = simplex[0].0.clone();
                for s in simplex.iter_mut().skip(1) {
                    s.0 = lerp(&b, &s.0, 0.5);
                    s.1 = f(&s.0);
                }
            }
        }
    }
    simplex.iter().map(|s| s.1).fold(f64::INFINITY, f64::min)
}
