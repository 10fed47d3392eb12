//! Quotients close to lacunary spaces or to stars.

use super::star::star_with_sets;
use super::ts::{ts_sets, TsSets};
use super::RunRecord;
use crate::error::{param, MetriqError, Result};
use crate::metric::{nearest_radii, realize_special, FiniteMetric, MetricSpace, SpecialMetric, TOL};
use crate::quotient::{distortion_identity, quotient_metric, sq_space, DistortionReport, QuotientSpace};
use crate::rng::Seed;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Lacunary,
    Star,
}

#[derive(Clone, Debug, Serialize)]
pub struct DichotomyResult {
    pub quotient: QuotientSpace,
    pub model: SpecialMetric,
    pub certificate: DistortionReport,
    pub branch: Branch,
    pub lacunary_size: usize,
    /// Size of the star branch, when it could be built.
    pub star_size: Option<usize>,
    pub record: RunRecord,
}

/// Index `i` with `rho^i <= x < rho^(i+1)`.
fn scale_index(x: f64, rho: f64) -> i64 {
    let mut i = (x.ln() / rho.ln()).floor() as i64;
    while rho.powi(i as i32) > x {
        i -= 1;
    }
    while rho.powi(i as i32 + 1) <= x {
        i += 1;
    }
    i
}

/// Either a `k`-lacunary quotient or a star quotient, each within distortion `alpha`;
/// the larger one is returned. With `drop_root`, the star branch loses its root block.
pub fn q_dichotomy(m: &MetricSpace, k: f64, beta: f64, alpha: f64, drop_root: bool, seed: Seed) -> Result<DichotomyResult> {
    dichotomy(m, k, beta, alpha, Some(drop_root), seed)
}

/// The `k`-lacunary branch of [`q_dichotomy`] alone, within distortion `alpha`.
pub fn lacunary_quotient(m: &MetricSpace, k: f64, beta: f64, alpha: f64, seed: Seed) -> Result<DichotomyResult> {
    dichotomy(m, k, beta, alpha, None, seed)
}

/// `star` is `None` to skip the star branch, or `Some(drop_root)`.
fn dichotomy(m: &MetricSpace, k: f64, beta: f64, alpha: f64, star: Option<bool>, seed: Seed) -> Result<DichotomyResult> {
    let drop_root = star.unwrap_or(false);
    if !(k >= 1.0) {
        return param(format!("lacunarity k must be >= 1, got {k}"));
    }
    if !(beta > 1.0 && beta <= 2.0 && alpha > beta && alpha < 2.0 * beta) {
        return param(format!("need 1 < beta <= 2 and beta < alpha < 2 beta, got beta = {beta}, alpha = {alpha}"));
    }
    let sets = ts_sets(m, seed.child(0))?;
    let rho = alpha / beta;
    let spacing = ((k.ln().max((1.0 / (beta - 1.0)).ln()) / rho.ln()).ceil() as i64).max(1);
    let r = nearest_radii(m);

    let mut classes: BTreeMap<i64, Vec<usize>> = BTreeMap::new();
    for &x in &sets.t {
        classes.entry(scale_index(r[x], rho)).or_default().push(x);
    }
    let mut residue = vec![0usize; spacing as usize];
    for (i, c) in &classes {
        residue[i.rem_euclid(spacing) as usize] += c.len();
    }
    let q = (0..residue.len()).max_by(|&a, &b| residue[a].cmp(&residue[b]).then(b.cmp(&a))).unwrap_or(0) as i64;
    let chosen: Vec<(i64, &Vec<usize>)> = classes.iter().rev().filter(|(i, _)| i.rem_euclid(spacing) == q).map(|(i, c)| (*i, c)).collect();

    let lac = lacunary_branch(m, &chosen, rho, k, alpha)?;
    let lacunary_size = lac.0.len();

    let mut notes = Vec::new();
    let want_star = star.is_some();
    let mut star = None;
    if let Some(&(i, _)) = chosen.iter().max_by(|a, b| a.1.len().cmp(&b.1.len()).then(b.0.cmp(&a.0))).filter(|_| want_star) {
        let lo = rho.powi(i as i32);
        match star_with_sets(m, sets.clone(), lo, lo * rho, alpha, seed.child(1)) {
            Ok(s) => star = Some(s),
            Err(e) => notes.push(format!("star branch unavailable: {e}")),
        }
    }
    let star_size = star.as_ref().map(|s| s.quotient.len() - usize::from(drop_root));

    let mut record = RunRecord::new(if want_star { "q_dichotomy" } else { "lacunary_quotient" }, seed, m.len());
    record.notes = notes;
    record.bound = Some(alpha);
    let result = match star {
        Some(s) if star_size.unwrap_or(0) > lacunary_size => {
            let (quotient, model) = if drop_root {
                let keep: Vec<usize> = (1..s.quotient.len()).collect();
                (sq_space(&s.quotient, &keep)?, SpecialMetric::Equilateral { n: keep.len(), edge: s.tau })
            } else {
                (s.quotient, s.model)
            };
            let certificate = distortion_identity(&quotient.metric, &realize_special(&model)?)?;
            record.attempts = sets.attempts + s.record.attempts;
            DichotomyResult { quotient, model, certificate, branch: Branch::Star, lacunary_size, star_size, record }
        }
        _ => {
            let (quotient, model, certificate) = lac;
            record.attempts = sets.attempts;
            DichotomyResult { quotient, model, certificate, branch: Branch::Lacunary, lacunary_size, star_size, record }
        }
    };
    if result.certificate.distortion > alpha + TOL {
        return Err(MetriqError::Certificate(format!("dichotomy distortion {} > alpha = {alpha}", result.certificate.distortion)));
    }
    let mut result = result;
    result.record.output_size = result.quotient.len();
    result.record.distortion = Some(result.certificate.distortion);
    Ok(result)
}

fn lacunary_branch(m: &MetricSpace, chosen: &[(i64, &Vec<usize>)], rho: f64, k: f64, alpha: f64) -> Result<(QuotientSpace, SpecialMetric, DistortionReport)> {
    let reps: Vec<usize> = chosen.iter().map(|(_, c)| *c.iter().min().expect("classes are nonempty")).collect();
    let a: Vec<f64> = chosen.iter().map(|(i, _)| rho.powi(*i as i32)).collect();
    let mut blocks: Vec<Vec<usize>> = reps.iter().map(|&v| vec![v]).collect();
    blocks.push((0..m.len()).filter(|x| !reps.contains(x)).collect());
    let quotient = quotient_metric(m, blocks)?;
    let model = SpecialMetric::Lacunary { a, k };
    let certificate = distortion_identity(&quotient.metric, &realize_special(&model)?)?;
    if certificate.distortion > alpha + TOL {
        return Err(MetriqError::Certificate(format!("lacunary distortion {} > alpha = {alpha}", certificate.distortion)));
    }
    Ok((quotient, model, certificate))
}

#[derive(Clone, Debug, Serialize)]
pub struct LacunaryResult {
    /// Points of `T` by decreasing nearest radius, then the collapsed rest.
    pub quotient: QuotientSpace,
    pub model: SpecialMetric,
    pub certificate: DistortionReport,
    pub sets: TsSets,
    pub record: RunRecord,
}

/// Quotient with at least `n/4 + 1` points that is within distortion 2 of a 1-lacunary space.
pub fn q2_lacunary(m: &MetricSpace, seed: Seed) -> Result<LacunaryResult> {
    let sets = ts_sets(m, seed)?;
    let r = nearest_radii(m);
    let mut t = sets.t.clone();
    t.sort_by(|&x, &y| r[y].total_cmp(&r[x]).then(x.cmp(&y)));
    let mut blocks: Vec<Vec<usize>> = t.iter().map(|&x| vec![x]).collect();
    blocks.push((0..m.len()).filter(|x| !sets.t.contains(x)).collect());
    let quotient = quotient_metric(m, blocks)?;
    let model = SpecialMetric::Lacunary { a: t.iter().map(|&x| r[x]).collect(), k: 1.0 };
    let certificate = distortion_identity(&quotient.metric, &realize_special(&model)?)?;
    if certificate.distortion > 2.0 + TOL {
        return Err(MetriqError::Certificate(format!("lacunary distortion {} > 2", certificate.distortion)));
    }
    let mut record = RunRecord::new("q2_lacunary", seed, m.len());
    record.output_size = quotient.len();
    record.attempts = sets.attempts;
    record.distortion = Some(certificate.distortion);
    record.bound = Some(2.0);
    Ok(LacunaryResult { quotient, model, certificate, sets, record })
}
