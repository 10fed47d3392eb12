//! Quotients of metric compositions that embed into HSTs.
//!
//! A composition replaces each point `z` of an outer space `M` by an inner space `N_z`;
//! points in different inner spaces are at `beta * gamma * d_M`, where `gamma` is the
//! largest inner diameter over the smallest outer distance.

use super::aspect::aspect_quotient;
use super::coloring::weighted_sigma;
use super::RunRecord;
use crate::error::{param, structural, MetriqError, Result};
use crate::hst::{hst_to_metric, validate_khst, Hst};
use crate::metric::{aspect_ratio, check_weights, FiniteMetric, MetricSpace, TOL};
use crate::quotient::{distortion_identity, quotient_metric, DistortionReport, QuotientSpace};
use crate::rng::Seed;
use serde::{Deserialize, Serialize};

/// Largest aspect ratio allowed for every outer and inner space.
pub const MAX_ASPECT: f64 = 4.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompositionTree {
    pub outer: MetricSpace,
    pub beta: f64,
    pub children: Vec<CompositionChild>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CompositionChild {
    Space(MetricSpace),
    Tree(Box<CompositionTree>),
}

impl CompositionChild {
    pub fn realize(&self) -> Result<MetricSpace> {
        match self {
            CompositionChild::Space(m) => Ok(m.clone()),
            CompositionChild::Tree(t) => Ok(t.realize()?.0),
        }
    }

    pub fn min_beta(&self) -> f64 {
        match self {
            CompositionChild::Space(_) => f64::INFINITY,
            CompositionChild::Tree(t) => t.min_beta(),
        }
    }
}

impl CompositionTree {
    /// Composed metric (children concatenated in outer order) and the scale `gamma`.
    ///
    /// When every inner space is a single point, `gamma` is taken as 1.
    pub fn realize(&self) -> Result<(MetricSpace, f64)> {
        if self.children.len() != self.outer.len() || self.outer.is_empty() {
            return structural(format!("{} inner spaces for {} outer points", self.children.len(), self.outer.len()));
        }
        if self.beta < 0.5 {
            return param(format!("beta must be at least 1/2, got {}", self.beta));
        }
        let inner: Vec<MetricSpace> = self.children.iter().map(|c| c.realize()).collect::<Result<_>>()?;
        let gamma = gamma(&self.outer, &inner);
        let mut owner = Vec::new();
        for (z, m) in inner.iter().enumerate() {
            owner.extend((0..m.len()).map(|i| (z, i)));
        }
        let scale = self.beta * gamma;
        let metric = MetricSpace::from_fn(owner.len(), |u, v| {
            let ((zu, iu), (zv, iv)) = (owner[u], owner[v]);
            if zu == zv {
                inner[zu].dist(iu, iv)
            } else {
                scale * self.outer.dist(zu, zv)
            }
        });
        Ok((metric, gamma))
    }

    pub fn min_beta(&self) -> f64 {
        self.children.iter().map(|c| c.min_beta()).fold(self.beta, f64::min)
    }
}

fn gamma(outer: &MetricSpace, inner: &[MetricSpace]) -> f64 {
    let max_diam = inner.iter().map(|m| m.diameter()).fold(0.0, f64::max);
    match outer.min_distance() {
        Some(d) if max_diam > 0.0 => max_diam / d,
        _ => 1.0,
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CompositionResult {
    /// Quotient of a subspace of the composed metric.
    pub quotient: QuotientSpace,
    /// Leaf `i` is block `i` of `quotient`.
    pub hst: Hst,
    /// Quotient against the tree metric.
    pub certificate: DistortionReport,
    /// `(1 + 1/beta) alpha` with the smallest `beta` in the tree.
    pub bound: f64,
    pub khst_valid: bool,
    pub sigma: f64,
    /// `sum over blocks of (max weight)^sigma`.
    pub lhs: f64,
    /// `(total weight)^sigma`.
    pub rhs: f64,
    pub record: RunRecord,
}

struct Sub {
    blocks: Vec<Vec<usize>>,
    hst: Hst,
    sigma: f64,
}

fn base(m: &MetricSpace, w: &[f64], alpha: f64, seed: Seed) -> Result<Sub> {
    if m.len() == 1 {
        return Ok(Sub { blocks: vec![vec![0]], hst: Hst::leaf(0), sigma: f64::INFINITY });
    }
    let aspect = aspect_ratio(m)?;
    if aspect > MAX_ASPECT + TOL {
        return param(format!("component has aspect ratio {aspect} > {MAX_ASPECT}"));
    }
    let r = aspect_quotient(m, alpha, false, Some(w), seed)?;
    let s = r.quotient.len();
    let hst = if s == 1 { Hst::leaf(0) } else { Hst::node(r.quotient.metric.diameter(), (0..s).map(Hst::leaf).collect()) };
    Ok(Sub { blocks: r.quotient.blocks, hst, sigma: weighted_sigma(r.colors) })
}

fn solve(child: &CompositionChild, w: &[f64], k: f64, alpha: f64, seed: Seed) -> Result<Sub> {
    let t = match child {
        CompositionChild::Space(m) => return base(m, w, alpha, seed),
        CompositionChild::Tree(t) => t,
    };
    if t.beta < alpha * k - TOL {
        return param(format!("beta = {} is below alpha * k = {}", t.beta, alpha * k));
    }
    let inner: Vec<MetricSpace> = t.children.iter().map(|c| c.realize()).collect::<Result<_>>()?;
    if inner.len() != t.outer.len() {
        return structural("inner space count differs from outer size");
    }
    let gamma = gamma(&t.outer, &inner);
    let mut offset = vec![0usize; inner.len() + 1];
    for (z, m) in inner.iter().enumerate() {
        offset[z + 1] = offset[z] + m.len();
    }
    let outer_w: Vec<f64> = (0..inner.len()).map(|z| w[offset[z]..offset[z + 1]].iter().sum()).collect();
    let top = base(&t.outer, &outer_w, alpha, seed.child(0))?;

    let mut blocks = Vec::new();
    let mut subtrees = Vec::new();
    let mut sigma = top.sigma;
    for (i, u) in top.blocks.iter().enumerate() {
        let zi = *u.iter().max_by(|&&a, &&b| outer_w[a].total_cmp(&outer_w[b]).then(b.cmp(&a))).expect("blocks are nonempty");
        let sub = solve(&t.children[zi], &w[offset[zi]..offset[zi + 1]], k, alpha, seed.child(1 + i as u64))?;
        sigma = sigma.min(sub.sigma);
        let first = blocks.len();
        for (j, b) in sub.blocks.iter().enumerate() {
            let mut v: Vec<usize> = b.iter().map(|&x| x + offset[zi]).collect();
            if j == 0 {
                for &z in u.iter().filter(|&&z| z != zi) {
                    v.extend(offset[z]..offset[z + 1]);
                }
                v.sort_unstable();
            }
            blocks.push(v);
        }
        subtrees.push(sub.hst.graft(&mut |leaf| Hst::leaf(leaf + first)));
    }
    let hst = top.hst.scaled((t.beta + 1.0) * gamma).graft(&mut |i| subtrees[i].clone());
    Ok(Sub { blocks, hst, sigma })
}

/// Subspace quotient of the composed metric with a non-contracting, `(1 + 1/beta) alpha`-Lipschitz
/// map into a `k`-HST, keeping a large share of the weight.
pub fn composition_qs(tree: &CompositionTree, k: f64, alpha: f64, weights: Option<&[f64]>, seed: Seed) -> Result<CompositionResult> {
    if !(k >= 1.0 && alpha > 1.0) {
        return param(format!("need k >= 1 and alpha > 1, got k = {k}, alpha = {alpha}"));
    }
    let (x, _) = tree.realize()?;
    let ones = vec![1.0; x.len()];
    let w = weights.unwrap_or(&ones);
    check_weights(x.len(), w)?;
    let root = CompositionChild::Tree(Box::new(tree.clone()));
    let sub = solve(&root, w, k, alpha, seed)?;
    let quotient = quotient_metric(&x, sub.blocks)?;
    let certificate = distortion_identity(&quotient.metric, &hst_to_metric(&sub.hst)?)?;
    let bound = (1.0 + 1.0 / tree.min_beta()) * alpha;
    if !certificate.non_contracting() || certificate.distortion > bound + TOL {
        return Err(MetriqError::Certificate(format!(
            "tree map has contraction {} and distortion {} (bound {bound})",
            certificate.contraction, certificate.distortion
        )));
    }
    let khst_valid = validate_khst(&sub.hst, k)?.is_valid();
    let sigma = if sub.sigma.is_finite() { sub.sigma } else { 1.0 };
    let lhs = quotient.blocks.iter().map(|b| b.iter().map(|&i| w[i]).fold(0.0, f64::max).powf(sigma)).sum();
    let rhs = w.iter().sum::<f64>().powf(sigma);
    let mut record = RunRecord::new("composition_qs", seed, x.len());
    record.output_size = quotient.len();
    record.distortion = Some(certificate.distortion);
    record.bound = Some(bound);
    Ok(CompositionResult { quotient, hst: sub.hst, certificate, bound, khst_valid, sigma, lhs, rhs, record })
}
