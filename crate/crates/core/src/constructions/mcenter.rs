//! m-centers: points that lie in every ball containing at least `m` points.

use super::{RunRecord, MAX_ATTEMPTS};
use crate::error::{param, MetriqError, Result};
use crate::hst::{hst_to_metric, Hst};
use crate::metric::{FiniteMetric, MetricSpace, TOL};
use crate::quotient::{distortion_identity, quotient_by_subset, DistortionReport, QuotientSpace};
use crate::rng::Seed;
use rand::Rng;
use serde::Serialize;

/// Smallest realized radius `r` with `|B(x, r)| >= m` (closed ball); `None` if `m > n`.
pub fn ball_radius(m: &impl FiniteMetric, x: usize, mparam: f64) -> Option<f64> {
    let need = (mparam.ceil() as usize).max(1);
    if need > m.len() {
        return None;
    }
    let mut row: Vec<f64> = (0..m.len()).map(|y| m.dist(x, y)).collect();
    row.sort_by(f64::total_cmp);
    Some(row[need - 1])
}

/// Whether `x` lies in every closed ball of size at least `mparam`.
///
/// Balls only change at realized distances, so checking the smallest qualifying radius
/// around each point is exhaustive.
pub fn is_m_center(m: &impl FiniteMetric, x: usize, mparam: f64) -> Result<bool> {
    if x >= m.len() {
        return param(format!("point {x} out of range"));
    }
    Ok((0..m.len()).all(|y| ball_radius(m, y, mparam).is_none_or(|r| m.dist(x, y) <= r + TOL)))
}

/// Lowest-index m-center, if any.
pub fn find_m_center(m: &impl FiniteMetric, mparam: f64) -> Option<usize> {
    (0..m.len()).find(|&x| is_m_center(m, x, mparam).unwrap_or(false))
}

#[derive(Clone, Debug, Serialize)]
pub struct MCenterResult {
    /// Collapsed set; it is the last block of `quotient`.
    pub t: Vec<usize>,
    pub quotient: QuotientSpace,
    pub mparam: f64,
    pub record: RunRecord,
}

impl MCenterResult {
    pub fn center_block(&self) -> usize {
        self.quotient.blocks.len() - 1
    }
}

/// Center parameter `2 ln(2/eps) / eps` used by the quotient below.
pub fn center_parameter(eps: f64) -> f64 {
    2.0 * (2.0 / eps).ln() / eps
}

/// Collapses a random set of at most `eps * n` points so that it becomes an m-center.
pub fn m_center_quotient(m: &MetricSpace, eps: f64, seed: Seed) -> Result<MCenterResult> {
    if !(eps > 0.0 && eps < 1.0) {
        return param(format!("eps must lie in (0, 1), got {eps}"));
    }
    let n = m.len();
    if n == 0 {
        return param("empty space");
    }
    let mparam = center_parameter(eps);
    let radius: Vec<Option<f64>> = (0..n).map(|x| ball_radius(m, x, mparam)).collect();
    let mut rng = seed.rng();
    let mut best = usize::MAX;
    for attempt in 1..=MAX_ATTEMPTS {
        let in_s: Vec<bool> = (0..n).map(|_| rng.random_bool(eps / 2.0)).collect();
        let t: Vec<usize> = (0..n).filter(|&x| in_s[x] || !(0..n).any(|y| in_s[y] && radius[x].is_none_or(|r| m.dist(x, y) <= r + TOL))).collect();
        best = best.min(t.len());
        if (t.len() as f64) <= eps * n as f64 {
            let quotient = quotient_by_subset(m, &t)?;
            let c = quotient.blocks.len() - 1;
            if !is_m_center(&quotient.metric, c, mparam)? {
                return Err(MetriqError::Certificate("collapsed set is not an m-center of the quotient".into()));
            }
            let mut record = RunRecord::new("m_center_quotient", seed, n);
            record.output_size = quotient.blocks.len();
            record.attempts = attempt;
            return Ok(MCenterResult { t, quotient, mparam, record });
        }
    }
    Err(MetriqError::ProbabilisticFailure {
        what: "m_center_quotient",
        attempts: MAX_ATTEMPTS,
        detail: format!("smallest collapsed set had {best} points, limit {}", eps * n as f64),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct HstResult {
    pub tree: Hst,
    pub certificate: DistortionReport,
    pub center: usize,
    /// Distortion bound `2m`.
    pub bound: f64,
}

/// Builds a 1-HST on a space with an m-center whose leaf metric dominates the space
/// and is at most `2m` times larger.
pub fn hst_from_m_centered(m: &MetricSpace, mparam: usize) -> Result<HstResult> {
    if mparam == 0 {
        return param("m must be at least 1");
    }
    let center = find_m_center(m, mparam as f64).ok_or_else(|| MetriqError::Parameter(format!("space has no {mparam}-center")))?;
    let pts: Vec<usize> = (0..m.len()).collect();
    let tree = split(m, &pts, Some(center), mparam)?;
    let certificate = distortion_identity(m, &hst_to_metric(&tree)?)?;
    Ok(HstResult { tree, certificate, center, bound: 2.0 * mparam as f64 })
}

fn split(m: &MetricSpace, pts: &[usize], center: Option<usize>, mm: usize) -> Result<Hst> {
    if pts.len() == 1 {
        return Ok(Hst::leaf(pts[0]));
    }
    let (mut diam, mut pair) = (-1.0, (pts[0], pts[0]));
    for (i, &x) in pts.iter().enumerate() {
        for &y in &pts[i + 1..] {
            if m.dist(x, y) > diam {
                diam = m.dist(x, y);
                pair = (x, y);
            }
        }
    }
    let a = match center {
        Some(x) if m.dist(x, pair.0) < diam / 2.0 => pair.1,
        _ => pair.0,
    };
    // Ring index of each point inside the open ball of radius diam/2 around `a`.
    let ring = |y: usize| -> Option<usize> {
        let d = m.dist(a, y);
        (d < diam / 2.0).then(|| ((d * 2.0 * mm as f64 / diam).floor() as usize).min(mm - 1))
    };
    let mut occupied = vec![false; mm + 1];
    for &y in pts {
        if let Some(j) = ring(y) {
            occupied[j] = true;
        }
    }
    let cut = (1..=mm).find(|&i| !occupied[i]).ok_or_else(|| MetriqError::Certificate("no empty ring; center hypothesis fails".into()))?;
    let (inner, outer): (Vec<usize>, Vec<usize>) = pts.iter().partition(|&&y| ring(y).is_some_and(|j| j < cut));
    Ok(Hst::node(diam, vec![split(m, &inner, None, mm)?, split(m, &outer, center, mm)?]))
}
