//! Quotients that are nearly equilateral, obtained by colouring pairs by distance scale.

use super::coloring::{coloring_partition, weighted_coloring_partition, PairColoring, WeightedColoringResult};
use super::RunRecord;
use crate::error::{param, MetriqError, Result};
use crate::lipschitz::{certify_lip_quotient, LipCertificate, QuotientMap};
use crate::metric::{aspect_ratio, realize_special, FiniteMetric, MetricSpace, SpecialMetric, TOL};
use crate::quotient::{distortion_identity, quotient_metric, DistortionReport, QuotientSpace};
use crate::rng::Seed;
use serde::Serialize;

/// Number of scales `floor(ln(aspect) / ln(alpha)) + 1`.
pub fn band_count(aspect: f64, alpha: f64) -> u32 {
    let mut k = ((aspect.ln() / alpha.ln()).floor() as i64 + 1).max(1) as u32;
    while aspect >= alpha.powi(k as i32) {
        k += 1;
    }
    while k > 1 && aspect < alpha.powi(k as i32 - 1) {
        k -= 1;
    }
    k
}

/// Colours each pair by the scale `c` with `d / d_min` in `[alpha^(c-1), alpha^c)`.
pub fn band_coloring(m: &MetricSpace, alpha: f64) -> Result<(PairColoring, f64)> {
    if !(alpha > 1.0) {
        return param(format!("alpha must exceed 1, got {alpha}"));
    }
    let dmin = m.min_distance().ok_or_else(|| MetriqError::Parameter("need at least two points".into()))?;
    let k = band_count(aspect_ratio(m)?, alpha);
    let col = PairColoring::from_fn(m.len(), k, |i, j| band_count(m.dist(i, j) / dmin, alpha).min(k))?;
    Ok((col, dmin))
}

#[derive(Clone, Debug, Serialize)]
pub struct AspectResult {
    pub quotient: QuotientSpace,
    /// Scale shared by all block distances.
    pub color: u32,
    pub colors: u32,
    pub dmin: f64,
    /// Against the equilateral space on the blocks.
    pub certificate: DistortionReport,
    pub lipschitz: Option<LipCertificate>,
    pub weighted: Option<WeightedColoringResult>,
    /// Guaranteed block count `floor(n^(ln alpha / (2 ln aspect)) / (8 ln n))`.
    pub size_bound: f64,
    pub record: RunRecord,
}

pub fn aspect_size_bound(n: usize, aspect: f64, alpha: f64) -> f64 {
    let nf = n as f64;
    if aspect <= 1.0 + TOL {
        return nf;
    }
    (nf.powf(alpha.ln() / (2.0 * aspect.ln())) / (8.0 * nf.ln())).floor()
}

/// Subspace quotient whose block distances all lie within a factor `alpha` of each other.
pub fn aspect_quotient(m: &MetricSpace, alpha: f64, lipschitz: bool, weights: Option<&[f64]>, seed: Seed) -> Result<AspectResult> {
    let (col, dmin) = band_coloring(m, alpha)?;
    let (blocks, color, weighted) = match weights {
        Some(w) => {
            let r = weighted_coloring_partition(&col, w, seed)?;
            (r.coloring.blocks.clone(), r.coloring.color, Some(r))
        }
        None => {
            let r = coloring_partition(&col, seed)?;
            (r.blocks, r.color, None)
        }
    };
    let quotient = quotient_metric(m, blocks)?;
    let s = quotient.len();
    let flat = realize_special(&SpecialMetric::Equilateral { n: s, edge: 1.0 })?;
    let certificate = distortion_identity(&quotient.metric, &flat)?;
    if certificate.distortion > alpha + TOL {
        return Err(MetriqError::Certificate(format!("block distances spread by {} > alpha = {alpha}", certificate.distortion)));
    }
    let lipschitz = if lipschitz {
        let mut support: Vec<usize> = quotient.blocks.concat();
        support.sort_unstable();
        let owner = quotient.assignment();
        let assign: Vec<usize> = support.iter().map(|&x| owner[x].expect("support point has a block")).collect();
        let map = QuotientMap::new(m.subspace(&support)?, flat.clone(), assign)?;
        let cert = certify_lip_quotient(&map, alpha)?;
        if !cert.pass {
            return Err(MetriqError::Certificate(format!("lip * colip = {} > alpha", cert.constants.product)));
        }
        Some(cert)
    } else {
        None
    };
    let size_bound = aspect_size_bound(m.len(), aspect_ratio(m)?, alpha);
    let mut record = RunRecord::new("aspect_quotient", seed, m.len());
    record.output_size = s;
    record.distortion = Some(certificate.distortion);
    record.bound = Some(alpha);
    Ok(AspectResult { quotient, color, colors: col.colors(), dmin, certificate, lipschitz, weighted, size_bound, record })
}
