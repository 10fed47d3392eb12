//! Star-shaped quotients built from points whose nearest radius lies in one band.

use super::coloring::{coloring_partition, PairColoring};
use super::ts::{ts_sets, TsSets};
use super::RunRecord;
use crate::error::{param, MetriqError, Result};
use crate::metric::{nearest_radii, realize_special, FiniteMetric, MetricSpace, SpecialMetric, TOL};
use crate::quotient::{distortion_identity, quotient_metric, DistortionReport, QuotientSpace};
use crate::rng::Seed;
use serde::Serialize;

/// Upper limit on the number of distance scales in the colouring.
pub const MAX_SCALES: usize = 64;

#[derive(Clone, Debug, Serialize)]
pub struct StarResult {
    /// Block 0 is the root; blocks `1..=s` are the leaves.
    pub quotient: QuotientSpace,
    pub model: SpecialMetric,
    pub tau: f64,
    pub certificate: DistortionReport,
    /// Guaranteed leaf count `floor(n^(ln alpha / 6) / (8 ln n))`.
    pub size_bound: f64,
    pub sets: TsSets,
    pub record: RunRecord,
}

impl StarResult {
    pub fn leaves(&self) -> usize {
        self.quotient.len() - 1
    }
}

/// Scale `c` in `0..=k` with `2b / alpha^(c+1) <= mu < 2b / alpha^c`.
fn scale(mu: f64, b: f64, alpha: f64, k: usize) -> usize {
    let mut c = (((2.0 * b / mu).ln() / alpha.ln()).ceil() as i64 - 1).max(0);
    while c > 0 && mu >= 2.0 * b / alpha.powi(c as i32) {
        c -= 1;
    }
    while mu < 2.0 * b / alpha.powi(c as i32 + 1) {
        c += 1;
    }
    (c as usize).min(k)
}

/// Finds a quotient within distortion `alpha` of a star, using points whose nearest radius
/// lies in `[a, b)`.
pub fn find_star_quotient(m: &MetricSpace, a: f64, b: f64, alpha: f64, seed: Seed) -> Result<StarResult> {
    let sets = ts_sets(m, seed.child(0))?;
    star_with_sets(m, sets, a, b, alpha, seed.child(1))
}

pub(crate) fn star_with_sets(m: &MetricSpace, sets: TsSets, a: f64, b: f64, alpha: f64, seed: Seed) -> Result<StarResult> {
    if !(a > 0.0 && a < b && b < 2.0 * a) {
        return param(format!("need 0 < a < b < 2a, got a = {a}, b = {b}"));
    }
    if !(alpha >= b / a - TOL && alpha <= 2.0 * b / a + TOL && alpha > 1.0) {
        return param(format!("need b/a <= alpha <= 2b/a, got alpha = {alpha}"));
    }
    let k = (((2.0 * b / a).ln() / alpha.ln()).ceil() as usize).saturating_sub(1);
    if k + 1 > MAX_SCALES {
        return param(format!("{} scales exceed the limit of {MAX_SCALES}", k + 1));
    }
    let r = nearest_radii(m);
    let band: Vec<usize> = sets.t.iter().copied().filter(|&x| r[x] >= a && r[x] < b).collect();
    if band.is_empty() {
        return Err(MetriqError::InsufficientBand(format!("no point of T has nearest radius in [{a}, {b})")));
    }
    let col = PairColoring::from_fn(band.len(), (k + 1) as u32, |i, j| {
        let (x, y) = (band[i], band[j]);
        scale(m.dist(x, y).min(r[x] + r[y]), b, alpha, k) as u32 + 1
    })?;
    let part = coloring_partition(&col, seed)?;
    let leaf_scale = part.color as i32 - 1;
    let tau = 2.0 * b / (a * alpha.powi(leaf_scale + 1));

    let mut used = vec![false; m.len()];
    let mut blocks = vec![Vec::new()];
    for blk in &part.blocks {
        let mapped: Vec<usize> = blk.iter().map(|&i| band[i]).collect();
        mapped.iter().for_each(|&x| used[x] = true);
        blocks.push(mapped);
    }
    blocks[0] = (0..m.len()).filter(|&x| !used[x]).collect();
    let quotient = quotient_metric(m, blocks)?;
    let model = SpecialMetric::Star { n: quotient.len() - 1, tau };
    let certificate = distortion_identity(&quotient.metric, &realize_special(&model)?)?;
    if certificate.distortion > alpha + TOL {
        return Err(MetriqError::Certificate(format!("star distortion {} > alpha = {alpha}", certificate.distortion)));
    }
    let n = m.len() as f64;
    let size_bound = (n.powf(alpha.ln() / 6.0) / (8.0 * n.ln())).floor();
    let mut record = RunRecord::new("find_star_quotient", seed, m.len());
    record.output_size = quotient.len();
    record.attempts = sets.attempts + part.attempts;
    record.distortion = Some(certificate.distortion);
    record.bound = Some(alpha);
    Ok(StarResult { quotient, model, tau, certificate, size_bound, sets, record })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_a_star() {
        let m = realize_special(&SpecialMetric::Star { n: 12, tau: 1.0 }).unwrap();
        let r = find_star_quotient(&m, 0.9, 1.1, 1.1 / 0.9, Seed::new(4)).unwrap();
        assert!(r.certificate.distortion <= 1.1 / 0.9 + 1e-9);
        assert!(r.leaves() >= 1);
    }

    #[test]
    fn empty_band_is_reported() {
        let m = realize_special(&SpecialMetric::Star { n: 6, tau: 1.0 }).unwrap();
        let e = find_star_quotient(&m, 5.0, 6.0, 1.2, Seed::new(0));
        assert!(matches!(e, Err(MetriqError::InsufficientBand(_))));
    }

    #[test]
    fn parameter_checks() {
        let m = realize_special(&SpecialMetric::Star { n: 6, tau: 1.0 }).unwrap();
        assert!(find_star_quotient(&m, 1.0, 3.0, 3.0, Seed::new(0)).is_err());
        assert!(find_star_quotient(&m, 1.0, 1.5, 1.2, Seed::new(0)).is_err());
    }

    #[test]
    fn scale_bands() {
        assert_eq!(scale(1.0, 1.0, 2.0, 5), 0);
        assert_eq!(scale(0.99, 1.0, 2.0, 5), 1);
        assert_eq!(scale(0.5, 1.0, 2.0, 5), 1);
    }
}
