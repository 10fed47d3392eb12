//! Collapse a small set to create an m-center, then embed the quotient.

use super::bourgain::{bourgain_embed, BourgainResult};
use crate::constructions::mcenter::{hst_from_m_centered, m_center_quotient, HstResult, MCenterResult};
use crate::error::Result;
use crate::metric::MetricSpace;
use crate::quotient::DistortionReport;
use crate::rng::Seed;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Target {
    Lp { p: f64 },
    Ultrametric,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", content = "result", rename_all = "snake_case")]
pub enum Stage {
    Lp(BourgainResult),
    Ultrametric(HstResult),
}

#[derive(Clone, Debug, Serialize)]
pub struct PipelineResult {
    pub collapse: MCenterResult,
    pub stage: Stage,
}

impl PipelineResult {
    pub fn certificate(&self) -> &DistortionReport {
        match &self.stage {
            Stage::Lp(b) => &b.certificate,
            Stage::Ultrametric(h) => &h.certificate,
        }
    }

    pub fn bound(&self) -> f64 {
        match &self.stage {
            Stage::Lp(b) => b.bound,
            Stage::Ultrametric(h) => h.bound,
        }
    }
}

/// The ultrametric route uses the integer center parameter `ceil(2 ln(2/eps) / eps)`.
pub fn pipeline_quotient_then_embed(m: &MetricSpace, eps: f64, target: Target, seed: Seed) -> Result<PipelineResult> {
    let collapse = m_center_quotient(m, eps, seed.child(0))?;
    let q = &collapse.quotient.metric;
    let stage = match target {
        Target::Lp { p } => Stage::Lp(bourgain_embed(q, collapse.mparam, p, None, seed.child(1))?),
        Target::Ultrametric => Stage::Ultrametric(hst_from_m_centered(q, collapse.mparam.ceil() as usize)?),
    };
    Ok(PipelineResult { collapse, stage })
}
