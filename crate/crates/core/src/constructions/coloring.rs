//! Partitions that are uniform with respect to an edge colouring of the complete graph.
//!
//! Given colours `1..=k` on pairs, the output blocks `A_1..A_s` and colour `l` satisfy:
//! every cross-block pair has colour at least `l`, and every point of `A_i` has a
//! colour-`l` partner in every other block.

use super::MAX_ATTEMPTS;
use crate::error::{param, structural, MetriqError, Result};
use crate::rng::Seed;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct PairColoring {
    n: usize,
    k: u32,
    c: Vec<u32>,
}

impl PairColoring {
    /// `f(i, j)` is evaluated for `i < j` and must lie in `1..=k`.
    pub fn from_fn(n: usize, k: u32, f: impl Fn(usize, usize) -> u32) -> Result<Self> {
        if k == 0 {
            return param("need at least one colour");
        }
        let mut c = vec![0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                if v == 0 || v > k {
                    return param(format!("pair ({i}, {j}) has colour {v}, allowed 1..={k}"));
                }
                c[i * n + j] = v;
                c[j * n + i] = v;
            }
        }
        Ok(PairColoring { n, k, c })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn colors(&self) -> u32 {
        self.k
    }

    #[inline]
    pub fn color(&self, i: usize, j: usize) -> u32 {
        self.c[i * self.n + j]
    }

    /// Colouring induced on `idx`, re-indexed `0..idx.len()`.
    pub fn restricted(&self, idx: &[usize]) -> PairColoring {
        let m = idx.len();
        let mut c = vec![0; m * m];
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                c[a * m + b] = self.color(i, j);
            }
        }
        PairColoring { n: m, k: self.k, c }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColoringResult {
    pub blocks: Vec<Vec<usize>>,
    pub color: u32,
    /// Guaranteed lower bound `floor(n^(1/k) / (8 ln n))` on the block count.
    pub guaranteed_blocks: usize,
    pub attempts: usize,
}

pub fn coloring_bound(n: usize, k: u32) -> usize {
    if n < 2 {
        return n;
    }
    let n = n as f64;
    (n.powf(1.0 / k as f64) / (8.0 * n.ln())).floor() as usize
}

/// Exhaustive check of the uniformity conditions.
pub fn verify_coloring(col: &PairColoring, blocks: &[Vec<usize>], color: u32) -> std::result::Result<(), String> {
    for (a, ba) in blocks.iter().enumerate() {
        for (b, bb) in blocks.iter().enumerate() {
            if a == b {
                continue;
            }
            for &p in ba {
                let mut witness = false;
                for &q in bb {
                    let c = col.color(p, q);
                    if c < color {
                        return Err(format!("pair ({p}, {q}) across blocks has colour {c} < {color}"));
                    }
                    witness |= c == color;
                }
                if !witness {
                    return Err(format!("point {p} of block {a} has no colour-{color} partner in block {b}"));
                }
            }
        }
    }
    Ok(())
}

pub fn coloring_partition(col: &PairColoring, seed: Seed) -> Result<ColoringResult> {
    if col.is_empty() {
        return param("empty colouring");
    }
    let mut rng = seed.rng();
    let mut attempts = 0;
    let all: Vec<usize> = (0..col.len()).collect();
    let (blocks, color) = solve(col, all, 1, &mut rng, &mut attempts)?;
    verify_coloring(col, &blocks, color).map_err(MetriqError::Certificate)?;
    Ok(ColoringResult { blocks, color, guaranteed_blocks: coloring_bound(col.len(), col.colors()), attempts })
}

fn solve(col: &PairColoring, v: Vec<usize>, c: u32, rng: &mut ChaCha8Rng, attempts: &mut usize) -> Result<(Vec<Vec<usize>>, u32)> {
    let kk = col.colors() - c + 1;
    let nn = v.len();
    if nn <= 1 || kk == 1 {
        return Ok((v.into_iter().map(|x| vec![x]).collect(), c));
    }
    let root = (nn as f64).powf(1.0 / kk as f64);
    let bound = coloring_bound(nn, kk);
    let deg: Vec<usize> = v.iter().map(|&i| v.iter().filter(|&&j| j != i && col.color(i, j) == c).count()).collect();
    let pairs = deg.iter().sum::<usize>() / 2;

    if pairs as f64 >= (nn as f64).powf(1.0 + 1.0 / kk as f64) / 2.0 {
        let dense: Vec<usize> = v.iter().zip(&deg).filter(|(_, &d)| d as f64 >= root / 4.0).map(|(&i, _)| i).collect();
        let s = bound.max(2);
        if s <= dense.len() {
            for _ in 0..MAX_ATTEMPTS {
                *attempts += 1;
                let mut parts = vec![Vec::new(); s];
                for &i in &dense {
                    parts[rng.random_range(0..s)].push(i);
                }
                if parts.iter().all(|p| !p.is_empty()) && verify_coloring(col, &parts, c).is_ok() {
                    return Ok((parts, c));
                }
            }
        }
        if bound <= 2 {
            // Any colour-c pair meets the guarantee when it asks for at most two blocks.
            for (a, &i) in v.iter().enumerate() {
                if let Some(&j) = v[a + 1..].iter().find(|&&j| col.color(i, j) == c) {
                    return Ok((vec![vec![i], vec![j]], c));
                }
            }
            return structural("dense colour class without a pair");
        }
        return Err(MetriqError::ProbabilisticFailure {
            what: "coloring_partition",
            attempts: MAX_ATTEMPTS,
            detail: format!("random {s}-way split of {} dense points never became uniform", dense.len()),
        });
    }

    // Sparse: greedy-colour the low-degree points and recurse on the largest class.
    let low: Vec<usize> = v.iter().zip(&deg).filter(|(_, &d)| (d as f64) < root).map(|(&i, _)| i).collect();
    let mut class = vec![usize::MAX; low.len()];
    let mut sizes: Vec<usize> = Vec::new();
    for a in 0..low.len() {
        let mut used = vec![false; sizes.len() + 1];
        for b in 0..a {
            if col.color(low[a], low[b]) == c {
                used[class[b]] = true;
            }
        }
        let k = used.iter().position(|u| !u).expect("one slot is always free");
        if k == sizes.len() {
            sizes.push(0);
        }
        class[a] = k;
        sizes[k] += 1;
    }
    let best = (0..sizes.len()).max_by(|&x, &y| sizes[x].cmp(&sizes[y]).then(y.cmp(&x))).unwrap_or(0);
    let indep: Vec<usize> = low.iter().zip(&class).filter(|(_, &k)| k == best).map(|(&i, _)| i).collect();
    solve(col, indep, c + 1, rng, attempts)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WeightedBranch {
    HeavyPair,
    LevelSet { threshold: f64, size: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WeightedColoringResult {
    pub coloring: ColoringResult,
    pub branch: WeightedBranch,
    pub sigma: f64,
    /// `sum over blocks of (max weight in block)^sigma`.
    pub lhs: f64,
    /// `(total weight)^sigma`.
    pub rhs: f64,
    pub holds: bool,
}

pub fn weighted_sigma(k: u32) -> f64 {
    1.0 / (8.0 * k as f64 * ((k + 1) as f64).ln())
}

fn weighted_lhs(w: &[f64], blocks: &[Vec<usize>], sigma: f64) -> f64 {
    blocks.iter().map(|b| b.iter().map(|&i| w[i]).fold(0.0, f64::max).powf(sigma)).sum()
}

/// Uniform partition that keeps a large share of the weight: either the two heaviest points,
/// or a colouring partition of the level set maximizing `|A| sqrt(w*)`, whichever scores higher.
pub fn weighted_coloring_partition(col: &PairColoring, w: &[f64], seed: Seed) -> Result<WeightedColoringResult> {
    let n = col.len();
    crate::metric::check_weights(n, w)?;
    if n < 2 {
        return param("need at least two points");
    }
    let sigma = weighted_sigma(col.colors());
    let rhs = w.iter().sum::<f64>().powf(sigma);

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| w[b].total_cmp(&w[a]).then(a.cmp(&b)));
    let (i, j) = (order[0].min(order[1]), order[0].max(order[1]));
    let pair = ColoringResult { blocks: vec![vec![i], vec![j]], color: col.color(i, j), guaranteed_blocks: 2, attempts: 0 };
    let mut best = (weighted_lhs(w, &pair.blocks, sigma), pair, WeightedBranch::HeavyPair);

    let mut level: Option<(f64, usize)> = None;
    for (rank, &x) in order.iter().enumerate() {
        let thr = w[x];
        if thr <= 0.0 {
            break;
        }
        let size = order[rank..].iter().take_while(|&&y| w[y] >= thr).count() + rank;
        let score = size as f64 * thr.sqrt();
        if size >= 3 && level.is_none_or(|(t, s)| score > s as f64 * t.sqrt()) {
            level = Some((thr, size));
        }
    }
    if let Some((thr, _)) = level {
        let a: Vec<usize> = (0..n).filter(|&x| w[x] >= thr).collect();
        let sub = coloring_partition(&col.restricted(&a), seed)?;
        let blocks: Vec<Vec<usize>> = sub.blocks.iter().map(|b| b.iter().map(|&y| a[y]).collect()).collect();
        let lhs = weighted_lhs(w, &blocks, sigma);
        if lhs >= best.0 {
            let res = ColoringResult { blocks, color: sub.color, guaranteed_blocks: sub.guaranteed_blocks, attempts: sub.attempts };
            best = (lhs, res, WeightedBranch::LevelSet { threshold: thr, size: a.len() });
        }
    }
    let (lhs, coloring, branch) = best;
    Ok(WeightedColoringResult { coloring, branch, sigma, lhs, rhs, holds: lhs >= rhs * (1.0 - 1e-12) })
}
