//! Truncated embeddings of `L_p` (`1 <= p < 2`) built from symmetric p-stable variables.
//!
//! Variables are normalized so that `E exp(i t g) = exp(-|t|^p)`; `F(x) = D exp(i <x, g> / D)`
//! then satisfies `|F(x)| = D` and `|F(x) - F(y)|_p^p = D^p 2^(p/2) E[(1 - cos(a g))^(p/2)]`
//! with `a = |x - y|_p / D`.

use super::vector::{EmbedMode, VectorEmbedding};
use crate::error::{param, Result};
use crate::metric::{FiniteMetric, MetricSpace};
use crate::rng::Seed;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;
use std::collections::HashMap;
use std::f64::consts::{FRAC_PI_2, PI};
use std::sync::{Arc, Mutex, OnceLock};

fn check_p(p: f64) -> Result<()> {
    if !(1.0..2.0).contains(&p) {
        return param(format!("p must lie in [1, 2), got {p}"));
    }
    Ok(())
}

/// Chambers-Mallows-Stuck sample of a standard symmetric p-stable variable.
pub fn sample_stable(p: f64, rng: &mut impl Rng) -> f64 {
    let u = (rng.random::<f64>() - 0.5) * PI;
    if p == 1.0 {
        return u.tan();
    }
    let w: f64 = rng.sample(Exp1);
    (p * u).sin() / u.cos().powf(1.0 / p) * ((u - p * u).cos() / w).powf((1.0 - p) / p)
}

/// Density of the standard symmetric p-stable law.
pub fn stable_density(u: f64, p: f64) -> f64 {
    let u = u.abs();
    if p == 1.0 {
        return 1.0 / (PI * (1.0 + u * u));
    }
    if u >= 20.0 {
        // Asymptotic series; terms shrink fast at this range for 1 < p < 2.
        let mut s = 0.0;
        for k in 1..=8 {
            let kf = k as f64;
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            s += sign * gamma(p * kf + 1.0) / gamma(kf + 1.0) * (PI * p * kf / 2.0).sin() * u.powf(-p * kf - 1.0);
        }
        return s / PI;
    }
    // Inversion of the characteristic function over [0, T] with e^(-T^p) = e^(-50).
    let top = 50f64.powf(1.0 / p);
    let width = (PI / (2.0 * u + 1.0)).min(0.5);
    let panels = (top / width).ceil() as usize;
    let h = top / panels as f64;
    let mut s = 0.0;
    for k in 0..panels {
        let a = k as f64 * h;
        for (x, w) in GL8 {
            let t = a + (x + 1.0) * h / 2.0;
            s += w * h / 2.0 * (t * u).cos() * (-t.powf(p)).exp();
        }
    }
    s / PI
}

/// Mean of `(1 - cos x)^(p/2)` over a period.
pub fn cosine_mean(p: f64) -> f64 {
    2f64.powf(p / 2.0) * gamma((p + 1.0) / 2.0) / (PI.sqrt() * gamma(p / 2.0 + 1.0))
}

const GL8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_2, 0.101_228_536_290_376_26),
];

/// Quadrature rule for `E f(g)` on the half line, mapped through `u = tan(theta)`.
struct StableRule {
    p: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    panel: f64,
}

const PANELS: usize = 2000;

impl StableRule {
    fn new(p: f64) -> Self {
        let panel = FRAC_PI_2 / PANELS as f64;
        let mut nodes = Vec::with_capacity(8 * PANELS);
        let mut weights = Vec::with_capacity(8 * PANELS);
        for k in 0..PANELS {
            for (x, w) in GL8 {
                let th = (k as f64 + (x + 1.0) / 2.0) * panel;
                let c = th.cos();
                nodes.push(th);
                weights.push(2.0 * w * panel / 2.0 * stable_density(th.tan(), p) / (c * c));
            }
        }
        StableRule { p, nodes, weights, panel }
    }

    /// `E[(1 - cos(a g))^(p/2)]`; where the integrand oscillates faster than a panel
    /// resolves, its period mean is used.
    fn expectation(&self, a: f64) -> f64 {
        let mean = cosine_mean(self.p);
        let half = self.p / 2.0;
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&th, &w)| {
                let c = th.cos();
                let v = if a * self.panel / (c * c) > 1.0 { mean } else { (1.0 - (a * th.tan()).cos()).max(0.0).powf(half) };
                w * v
            })
            .sum()
    }
}

fn rule(p: f64) -> Arc<StableRule> {
    static CACHE: OnceLock<Mutex<HashMap<u64, Arc<StableRule>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("rule cache lock");
    guard.entry(p.to_bits()).or_insert_with(|| Arc::new(StableRule::new(p))).clone()
}

/// `E[(1 - cos(a g))^(p/2)]` by quadrature against the density.
pub fn cosine_expectation(a: f64, p: f64) -> Result<f64> {
    check_p(p)?;
    if a == 0.0 {
        return Ok(0.0);
    }
    Ok(rule(p).expectation(a.abs()))
}

/// The same expectation estimated from `samples` stable draws.
pub fn cosine_expectation_mc(a: f64, p: f64, samples: usize, seed: Seed) -> Result<f64> {
    check_p(p)?;
    let mut rng = seed.rng();
    let s: f64 = (0..samples).map(|_| (1.0 - (a * sample_stable(p, &mut rng)).cos()).powf(p / 2.0)).sum();
    Ok(s / samples as f64)
}

/// Distance between images of points at `L_p` distance `d` under the level-`D` embedding.
pub fn pstable_distance(d: f64, level: f64, p: f64) -> Result<f64> {
    if !(level > 0.0 && d >= 0.0) {
        return param("need level > 0 and d >= 0");
    }
    let e = cosine_expectation(d / level, p)?;
    Ok(level * (2f64.powf(p / 2.0) * e).powf(1.0 / p))
}

/// Materializes the embedding with `features` sampled stable directions.
pub fn pstable_embed(points: &[Vec<f64>], level: f64, p: f64, features: usize, seed: Seed) -> Result<VectorEmbedding> {
    check_p(p)?;
    if !(level > 0.0) || features == 0 {
        return param("need a positive level and at least one feature");
    }
    let dim = points.first().map_or(0, |v| v.len());
    if points.iter().any(|v| v.len() != dim) {
        return param("points have different dimensions");
    }
    let mut rng = seed.rng();
    let g: Vec<f64> = (0..features * dim).map(|_| sample_stable(p, &mut rng)).collect();
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
    VectorEmbedding::complex(p, EmbedMode::MonteCarlo, vectors, Some(vec![1.0 / features as f64; features]))
}

/// Fitted constants of the two-sided envelope `c1 min{d,D} / D^(1-1/p) <= psi <= c2 (ln D)^(1/p) min{d,D}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Envelope {
    pub c1: f64,
    pub c2: f64,
    pub image_norm: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct UptologResult {
    pub metric: MetricSpace,
    pub envelope: Envelope,
    /// Sampled vectors, when requested for integer points.
    pub embedding: Option<VectorEmbedding>,
}

/// Distance under `psi` for points at `L_1` distance `d`.
pub fn uptolog_distance(d: f64, level: f64, p: f64) -> Result<f64> {
    pstable_distance(d.powf(1.0 / p), level.powf(1.0 / p), p)
}

/// Embeds `L_1` points at mutual distance at least 1 into `L_p` with image norms `D^(1/p)`.
///
/// Distances are computed analytically. With `features`, integer-coordinate points are also
/// materialized through their unary encoding, whose `L_p` distance is the `L_1` distance to the `1/p`.
pub fn uptolog_embed(points: &[Vec<f64>], level: f64, p: f64, features: Option<usize>, seed: Seed) -> Result<UptologResult> {
    check_p(p)?;
    if !(level >= 2.0) {
        return param(format!("level must be at least 2, got {level}"));
    }
    let l1 = |a: &Vec<f64>, b: &Vec<f64>| a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>();
    let n = points.len();
    let mut ds = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let d = l1(&points[i], &points[j]);
            if d < 1.0 {
                return param(format!("points {i} and {j} are closer than 1"));
            }
            let v = uptolog_distance(d, level, p)?;
            ds[i * n + j] = v;
            ds[j * n + i] = v;
        }
    }
    let metric = MetricSpace::from_flat(n, ds)?;
    let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
    for i in 0..n {
        for j in i + 1..n {
            let t = l1(&points[i], &points[j]).min(level);
            let v = metric.dist(i, j);
            c1 = c1.min(v * level.powf(1.0 - 1.0 / p) / t);
            c2 = c2.max(v / (level.ln().powf(1.0 / p) * t));
        }
    }
    let embedding = match features {
        Some(f) => {
            let unary = unary_encode(points)?;
            Some(pstable_embed(&unary, level.powf(1.0 / p), p, f, seed)?)
        }
        None => None,
    };
    Ok(UptologResult { metric, envelope: Envelope { c1, c2, image_norm: level.powf(1.0 / p) }, embedding })
}

fn unary_encode(points: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let dim = points.first().map_or(0, |v| v.len());
    if points.iter().flatten().any(|x| x.fract() != 0.0) {
        return param("materialized vectors need integer coordinates");
    }
    let lo: Vec<f64> = (0..dim).map(|k| points.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min)).collect();
    let span: Vec<usize> = (0..dim).map(|k| points.iter().map(|v| (v[k] - lo[k]) as usize).max().unwrap_or(0)).collect();
    Ok(points
        .iter()
        .map(|v| {
            let mut out = Vec::new();
            for k in 0..dim {
                let c = (v[k] - lo[k]) as usize;
                out.extend((0..span[k]).map(|t| if t < c { 1.0 } else { 0.0 }));
            }
            out
        })
        .collect())
}
