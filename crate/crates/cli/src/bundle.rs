//! Sealed artifact bundles and their independent verification.
//!
//! A bundle is `{"format", "checksum", "payload"}` where `checksum` is the SHA-256 of the
//! compact JSON text of `payload`. Verification recomputes every stored distance and
//! certificate from the raw inputs with the metric and quotient evaluators only.

use crate::error::{CliError, Result};
use metriq_core::embed::gauss::truncated_gauss_embed;
use metriq_core::embed::pstable::pstable_embed;
use metriq_core::embed::VectorEmbedding;
use metriq_core::hst::{hst_to_metric, Hst};
use metriq_core::lipschitz::{lip_colip, LipColip, QuotientMap};
use metriq_core::metric::FiniteMetric;
use metriq_core::quotient::{check_blocks, distortion_identity, quotient_metric};
use metriq_core::{DistortionReport, MetricSpace, Provenance, QuotientSpace, Seed};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const BUNDLE_FORMAT: &str = "metriq-bundle/1";

/// Relative slack when comparing a recomputed distortion with a stored one.
const DISTORTION_RTOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum FeatureFamily {
    Gauss,
    Stable { p: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairValue {
    pub i: usize,
    pub j: usize,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Artifact {
    /// A quotient, optionally certified against a model space.
    Quotient {
        name: String,
        quotient: QuotientSpace,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        model: Option<MetricSpace>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        certificate: Option<DistortionReport>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
        /// Blocks dropped from an SQ space; by default every uncovered point forms one block.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        hidden: Option<Vec<Vec<usize>>>,
    },
    /// Vectors whose induced metric is certified against `source`.
    Embedding {
        name: String,
        source: MetricSpace,
        embedding: VectorEmbedding,
        certificate: DistortionReport,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    /// A tree whose leaf metric is certified against `source`.
    Tree {
        name: String,
        source: MetricSpace,
        tree: Hst,
        certificate: DistortionReport,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bound: Option<f64>,
    },
    /// Sampled feature distances; verification resamples with a fresh seed.
    Features {
        name: String,
        points: Vec<Vec<f64>>,
        level: f64,
        #[serde(flatten)]
        family: FeatureFamily,
        features: usize,
        seed: Seed,
        distances: Vec<PairValue>,
        /// Allowed relative gap between the stored and resampled distances.
        rtol: f64,
    },
    /// Lipschitz and co-Lipschitz constants of a surjection.
    LipMap { name: String, map: QuotientMap, constants: LipColip },
}

impl Artifact {
    pub fn name(&self) -> &str {
        match self {
            Artifact::Quotient { name, .. }
            | Artifact::Embedding { name, .. }
            | Artifact::Tree { name, .. }
            | Artifact::Features { name, .. }
            | Artifact::LipMap { name, .. } => name,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Payload {
    pub artifacts: Vec<Artifact>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Issue {
    pub artifact: String,
    pub check: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair: Option<(usize, usize)>,
    pub detail: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub artifacts: usize,
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.issues.is_empty()
    }
}

fn checksum(payload: &Value) -> String {
    let digest = Sha256::digest(payload.to_string().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Wraps a payload with its format tag and checksum.
pub fn seal(payload: &Payload) -> Result<Value> {
    let body = serde_json::to_value(payload)?;
    Ok(serde_json::json!({ "format": BUNDLE_FORMAT, "checksum": checksum(&body), "payload": body }))
}

/// Checks the format tag and checksum, then parses the payload.
pub fn open(bundle: &Value) -> Result<Payload> {
    let format = bundle.get("format").and_then(Value::as_str);
    if format != Some(BUNDLE_FORMAT) {
        return Err(CliError::Structural(format!("unknown bundle format {format:?}")));
    }
    let body = bundle.get("payload").ok_or_else(|| CliError::Structural("bundle has no payload".into()))?;
    let stored = bundle.get("checksum").and_then(Value::as_str).unwrap_or_default();
    let actual = checksum(body);
    if stored != actual {
        return Err(CliError::Structural(format!("checksum mismatch: stored {stored}, computed {actual}")));
    }
    serde_json::from_value(body.clone()).map_err(|e| CliError::Structural(format!("payload schema: {e}")))
}

/// Opens a bundle and re-checks every artifact; `fresh` seeds the resampling of feature artifacts.
pub fn verify_bundle(bundle: &Value, tol: f64, fresh: Seed) -> Result<ValidationReport> {
    let payload = open(bundle)?;
    let mut report = ValidationReport { artifacts: payload.artifacts.len(), issues: Vec::new() };
    for (k, a) in payload.artifacts.iter().enumerate() {
        let mut push = |check: &str, pair: Option<(usize, usize)>, detail: String| {
            report.issues.push(Issue { artifact: a.name().to_owned(), check: check.into(), pair, detail });
        };
        if let Err(e) = verify_artifact(a, tol, fresh.child(k as u64), &mut push) {
            push("evaluate", None, e.to_string());
        }
    }
    Ok(report)
}

type Push<'a> = dyn FnMut(&str, Option<(usize, usize)>, String) + 'a;

fn verify_artifact(a: &Artifact, tol: f64, fresh: Seed, push: &mut Push) -> Result<()> {
    match a {
        Artifact::Quotient { quotient, model, certificate, bound, hidden, .. } => {
            let recomputed = recompute_quotient(quotient, hidden.as_deref())?;
            compare_matrices(&quotient.metric, &recomputed, tol, push);
            if let Some(model) = model {
                let report = distortion_identity(&recomputed, model)?;
                check_certificate(&report, certificate.as_ref(), *bound, tol, push);
            }
        }
        Artifact::Embedding { source, embedding, certificate, bound, .. } => {
            let report = distortion_identity(source, &embedding.induced_metric())?;
            check_certificate(&report, Some(certificate), *bound, tol, push);
        }
        Artifact::Tree { source, tree, certificate, bound, .. } => {
            let report = distortion_identity(source, &hst_to_metric(tree)?)?;
            check_certificate(&report, Some(certificate), *bound, tol, push);
        }
        Artifact::Features { points, level, family, features, seed, distances, rtol, .. } => {
            let fresh = if fresh == *seed { fresh.child(1) } else { fresh };
            let e = match family {
                FeatureFamily::Gauss => truncated_gauss_embed(points, *level, *features, fresh)?,
                FeatureFamily::Stable { p } => pstable_embed(points, *level, *p, *features, fresh)?,
            };
            for pv in distances {
                if pv.i >= points.len() || pv.j >= points.len() {
                    push("index", Some((pv.i, pv.j)), "pair out of range".into());
                    continue;
                }
                let again = e.dist(pv.i, pv.j);
                let scale = again.abs().max(pv.value.abs());
                if (again - pv.value).abs() > rtol * scale + tol {
                    push("resample", Some((pv.i, pv.j)), format!("stored {}, resampled {again}", pv.value));
                }
            }
        }
        Artifact::LipMap { map, constants, .. } => {
            let again = lip_colip(map)?;
            for (what, x, y) in [("lip", constants.lip, again.lip), ("colip", constants.colip, again.colip), ("product", constants.product, again.product)] {
                if (x - y).abs() > tol + DISTORTION_RTOL * y.abs() {
                    push(what, None, format!("stored {x}, recomputed {y}"));
                }
            }
        }
    }
    Ok(())
}

/// Quotient distances from the base metric and blocks alone.
fn recompute_quotient(q: &QuotientSpace, hidden: Option<&[Vec<usize>]>) -> Result<MetricSpace> {
    let covers = check_blocks(q.base.len(), &q.blocks)?;
    if covers {
        return Ok(quotient_metric(&q.base, q.blocks.clone())?.metric);
    }
    if q.provenance != Provenance::SQ {
        return Err(CliError::Structural(format!("{:?} quotient does not cover its base", q.provenance)));
    }
    let mut blocks = q.blocks.clone();
    match hidden {
        Some(h) => blocks.extend(h.iter().cloned()),
        None => {
            let assigned = q.assignment();
            blocks.push((0..q.base.len()).filter(|&x| assigned[x].is_none()).collect());
        }
    }
    let full = quotient_metric(&q.base, blocks)?;
    let keep: Vec<usize> = (0..q.blocks.len()).collect();
    Ok(full.metric.subspace(&keep)?)
}

fn compare_matrices(stored: &MetricSpace, recomputed: &MetricSpace, tol: f64, push: &mut Push) {
    if stored.len() != recomputed.len() {
        push("size", None, format!("stored {} blocks, recomputed {}", stored.len(), recomputed.len()));
        return;
    }
    for i in 0..stored.len() {
        for j in i + 1..stored.len() {
            let (a, b) = (stored.dist(i, j), recomputed.dist(i, j));
            if (a - b).abs() > tol {
                push("distance", Some((i, j)), format!("stored {a}, recomputed {b}"));
            }
        }
    }
}

fn check_certificate(report: &DistortionReport, stored: Option<&DistortionReport>, bound: Option<f64>, tol: f64, push: &mut Push) {
    if let Some(c) = stored {
        let gap = (c.distortion - report.distortion).abs();
        if gap > tol + DISTORTION_RTOL * report.distortion {
            push("certificate", None, format!("stored distortion {}, recomputed {}", c.distortion, report.distortion));
        }
    }
    if let Some(b) = bound {
        if report.distortion > b + tol {
            push("bound", None, format!("distortion {} exceeds bound {b}", report.distortion));
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use metriq_core::generators::random_metric;
    use metriq_core::quotient::quotient_by_subset;

    fn sample() -> Payload {
        let m = random_metric(6, Seed::new(1));
        let q = quotient_by_subset(&m, &[0, 1]).unwrap();
        Payload { artifacts: vec![Artifact::Quotient { name: "q".into(), quotient: q, model: None, certificate: None, bound: None, hidden: None }] }
    }

    #[test]
    fn clean_bundle_has_no_issues() {
        let b = seal(&sample()).unwrap();
        let r = verify_bundle(&b, 1e-9, Seed::new(5)).unwrap();
        assert_eq!(r.artifacts, 1);
        assert!(r.is_clean(), "{:?}", r.issues);
    }

    #[test]
    fn edited_payload_fails_checksum() {
        let mut b = seal(&sample()).unwrap();
        b["payload"]["artifacts"][0]["quotient"]["dist"][0][1] = serde_json::json!(100.0);
        assert!(matches!(verify_bundle(&b, 1e-9, Seed::new(5)), Err(CliError::Structural(_))));
    }

    #[test]
    fn wrong_format_is_structural() {
        let mut b = seal(&sample()).unwrap();
        b["format"] = serde_json::json!("other");
        assert!(matches!(open(&b), Err(CliError::Structural(_))));
    }
}
