//! Experiment plans: an instance family, a pipeline of operations, and a trial count.
//!
//! Trial `t` realizes the instance with `Seed::new(seed).child(t)` and runs every step with
//! child seeds of that trial seed, so rows do not depend on scheduling. Trials run in
//! parallel and are reported in trial order.

use crate::bundle::{Artifact, Payload};
use crate::error::{CliError, Result};
use metriq_core::constructions::aspect::aspect_quotient;
use metriq_core::constructions::composition::composition_qs;
use metriq_core::constructions::dichotomy::{lacunary_quotient, q2_lacunary, q_dichotomy};
use metriq_core::constructions::mcenter::{hst_from_m_centered, m_center_quotient};
use metriq_core::constructions::star::find_star_quotient;
use metriq_core::cube::{cube_qs_build, MAX_DIM};
use metriq_core::embed::bourgain::bourgain_embed;
use metriq_core::embed::EmbedMode;
use metriq_core::generators::InstanceSpec;
use metriq_core::metric::{realize_special, FiniteMetric, SpecialMetric};
use metriq_core::{DistortionReport, MetricSpace, QuotientSpace, Seed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use std::time::Instant;

/// Largest cube whose quotient is written into a bundle in full.
const BUNDLE_CUBE_DIM: usize = 10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Step {
    Mcenter {
        eps: f64,
    },
    /// Uses the center parameter of a preceding `mcenter` step when `m` is absent.
    Hst {
        #[serde(default)]
        m: Option<usize>,
    },
    Bourgain {
        p: f64,
        #[serde(default)]
        m: Option<f64>,
        #[serde(default)]
        mode: Option<EmbedMode>,
    },
    Star {
        a: f64,
        b: f64,
        alpha: f64,
    },
    Lacunary {
        k: f64,
        beta: f64,
        alpha: f64,
    },
    Dichotomy {
        k: f64,
        beta: f64,
        alpha: f64,
        #[serde(default)]
        drop_root: bool,
    },
    Q2,
    Aspect {
        alpha: f64,
        #[serde(default)]
        lipschitz: bool,
    },
    Composition {
        k: f64,
        alpha: f64,
    },
    CubeQs {
        eps: f64,
        #[serde(default = "two")]
        p: f64,
    },
}

fn two() -> f64 {
    2.0
}

impl Step {
    pub fn name(&self) -> &'static str {
        match self {
            Step::Mcenter { .. } => "mcenter",
            Step::Hst { .. } => "hst",
            Step::Bourgain { .. } => "bourgain",
            Step::Star { .. } => "star",
            Step::Lacunary { .. } => "lacunary",
            Step::Dichotomy { .. } => "dichotomy",
            Step::Q2 => "q2",
            Step::Aspect { .. } => "aspect",
            Step::Composition { .. } => "composition",
            Step::CubeQs { .. } => "cube_qs",
        }
    }

    fn check(&self) -> std::result::Result<(), String> {
        let ok = match *self {
            Step::Mcenter { eps } => eps > 0.0 && eps < 1.0,
            Step::Hst { m } => m.is_none_or(|m| m >= 1),
            Step::Bourgain { p, m, .. } => p >= 1.0 && m.is_none_or(|m| m >= 1.0),
            Step::Star { a, b, alpha } => a > 0.0 && a < b && b < 2.0 * a && b / a <= alpha && alpha <= 2.0 * b / a,
            Step::Lacunary { k, beta, alpha } | Step::Dichotomy { k, beta, alpha, .. } => {
                k >= 1.0 && beta > 1.0 && beta <= 2.0 && alpha > beta && alpha < 2.0 * beta
            }
            Step::Q2 => true,
            Step::Aspect { alpha, .. } => alpha > 1.0 && alpha <= 2.0,
            Step::Composition { k, alpha } => k >= 1.0 && alpha > 1.0 && alpha <= 2.0,
            Step::CubeQs { eps, p } => eps > 0.0 && eps < 0.25 && (1.0..=2.0).contains(&p),
        };
        if ok {
            Ok(())
        } else {
            Err(format!("parameters of step {} are out of range: {self:?}", self.name()))
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Outputs {
    #[serde(default)]
    pub csv: Option<PathBuf>,
    #[serde(default)]
    pub summary: Option<PathBuf>,
    #[serde(default)]
    pub bundle: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentPlan {
    pub instance: InstanceSpec,
    pub pipeline: Vec<Step>,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub outputs: Outputs,
}

impl ExperimentPlan {
    /// Checks parameter ranges and step order before anything runs.
    pub fn validate(&self) -> Result<()> {
        let plan = |m: String| Err(CliError::Plan(m));
        if self.pipeline.is_empty() {
            return plan("pipeline is empty".into());
        }
        let mut centered = false;
        for (i, s) in self.pipeline.iter().enumerate() {
            s.check().map_err(CliError::Plan)?;
            match s {
                Step::CubeQs { .. } | Step::Composition { .. } if i > 0 => {
                    return plan(format!("{} must be the first step", s.name()));
                }
                Step::CubeQs { .. } => match self.instance {
                    InstanceSpec::Cube { d } if d <= MAX_DIM => {}
                    _ => return plan(format!("cube_qs needs a cube instance of dimension at most {MAX_DIM}")),
                },
                Step::Composition { .. } if !matches!(self.instance, InstanceSpec::Composition { .. }) => {
                    return plan("composition needs a composition instance".into());
                }
                Step::Hst { m: None } if !centered => return plan("hst without m must follow mcenter".into()),
                _ => {}
            }
            centered |= matches!(s, Step::Mcenter { .. });
        }
        Ok(())
    }
}

/// One CSV row. Empty cells are `None`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub trial: usize,
    /// Trial seed as `base:stream`.
    pub seed: String,
    pub n: Option<usize>,
    pub quotient_size: Option<usize>,
    pub provenance: Option<String>,
    pub target_class: Option<String>,
    pub p: Option<f64>,
    pub certified_distortion: Option<f64>,
    pub paper_bound: Option<f64>,
    pub attempts: Option<usize>,
    pub millis: Option<u128>,
}

pub const CSV_HEADER: &str = "trial,seed,n,quotient_size,provenance,target_class,p,certified_distortion,paper_bound,attempts,millis";

impl TrialRow {
    pub fn to_csv(&self) -> String {
        fn cell<T: ToString>(x: &Option<T>) -> String {
            x.as_ref().map(T::to_string).unwrap_or_default()
        }
        [
            self.trial.to_string(),
            self.seed.clone(),
            cell(&self.n),
            cell(&self.quotient_size),
            cell(&self.provenance),
            cell(&self.target_class),
            cell(&self.p),
            cell(&self.certified_distortion),
            cell(&self.paper_bound),
            cell(&self.attempts),
            cell(&self.millis),
        ]
        .join(",")
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialFailure {
    pub trial: usize,
    pub step: String,
    pub error: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Quantiles {
    pub min: f64,
    pub q25: f64,
    pub median: f64,
    pub q75: f64,
    pub max: f64,
    pub mean: f64,
}

impl Quantiles {
    /// Linear interpolation between order statistics; `None` for no data.
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let at = |q: f64| {
            let x = q * (v.len() - 1) as f64;
            let (lo, hi) = (x.floor() as usize, x.ceil() as usize);
            v[lo] + (v[hi] - v[lo]) * (x - lo as f64)
        };
        Some(Quantiles { min: v[0], q25: at(0.25), median: at(0.5), q75: at(0.75), max: v[v.len() - 1], mean: v.iter().sum::<f64>() / v.len() as f64 })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub seed: u64,
    pub pipeline: Vec<String>,
    pub trials: usize,
    pub succeeded: usize,
    pub failed: usize,
    pub failure_rate: f64,
    /// Rows whose certified distortion exceeds their bound.
    pub bound_violations: usize,
    pub distortion: Option<Quantiles>,
    pub quotient_size: Option<Quantiles>,
    pub failures: Vec<TrialFailure>,
    pub started_unix: u64,
    pub elapsed_millis: u128,
}

/// Everything a run produces.
#[derive(Clone, Debug)]
pub struct ReportBundle {
    pub rows: Vec<TrialRow>,
    pub summary: Summary,
    pub artifacts: Payload,
}

impl ReportBundle {
    pub fn csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out += &r.to_csv();
            out.push('\n');
        }
        out
    }
}

#[derive(Default)]
struct State {
    metric: Option<MetricSpace>,
    quotient: Option<QuotientSpace>,
    mparam: Option<f64>,
    row: TrialRow,
    artifacts: Vec<Artifact>,
}

impl State {
    fn metric(&self) -> Result<&MetricSpace> {
        self.metric.as_ref().ok_or_else(|| CliError::Plan("step needs a realized metric".into()))
    }

    fn set_quotient(&mut self, q: QuotientSpace) {
        self.row.quotient_size = Some(q.len());
        self.row.provenance = Some(format!("{:?}", q.provenance));
        self.metric = Some(q.metric.clone());
        self.quotient = Some(q);
    }

    fn certify(&mut self, class: &str, p: Option<f64>, c: &DistortionReport, bound: f64, attempts: usize) {
        self.row.target_class = Some(class.into());
        self.row.p = p;
        self.row.certified_distortion = Some(c.distortion);
        self.row.paper_bound = Some(bound);
        *self.row.attempts.get_or_insert(0) += attempts;
    }

    fn quotient_artifact(&mut self, name: String, model: Option<MetricSpace>, c: Option<&DistortionReport>, bound: Option<f64>) {
        if let Some(q) = &self.quotient {
            self.artifacts.push(Artifact::Quotient { name, quotient: q.clone(), model, certificate: c.cloned(), bound, hidden: None });
        }
    }
}

fn class_of(model: &SpecialMetric) -> &'static str {
    match model {
        SpecialMetric::Equilateral { .. } => "equilateral",
        SpecialMetric::Lacunary { .. } => "lacunary",
        SpecialMetric::Star { .. } => "star",
    }
}

fn run_step(step: &Step, st: &mut State, instance: &InstanceSpec, seed: Seed, tag: &str) -> Result<()> {
    let name = format!("{tag}/{}", step.name());
    match *step {
        Step::Mcenter { eps } => {
            let r = m_center_quotient(st.metric()?, eps, seed)?;
            st.mparam = Some(r.mparam);
            *st.row.attempts.get_or_insert(0) += r.record.attempts;
            st.set_quotient(r.quotient);
            st.quotient_artifact(name, None, None, None);
        }
        Step::Hst { m } => {
            let src = st.metric()?.clone();
            let m = match m {
                Some(m) => m,
                None => st.mparam.map(|x| x.ceil() as usize).expect("validated: hst follows mcenter"),
            };
            let r = hst_from_m_centered(&src, m)?;
            st.certify("UM", None, &r.certificate, r.bound, 0);
            st.artifacts.push(Artifact::Tree { name, source: src, tree: r.tree, certificate: r.certificate, bound: Some(r.bound) });
        }
        Step::Bourgain { p, m, mode } => {
            let src = st.metric()?.clone();
            let m = m.or(st.mparam).unwrap_or(src.len() as f64);
            let r = bourgain_embed(&src, m, p, mode, seed)?;
            st.certify("lp", Some(p), &r.certificate, r.bound, 0);
            st.artifacts.push(Artifact::Embedding { name, source: src, embedding: r.embedding, certificate: r.certificate, bound: Some(r.bound) });
        }
        Step::Star { a, b, alpha } => {
            let r = find_star_quotient(st.metric()?, a, b, alpha, seed)?;
            st.set_quotient(r.quotient);
            st.certify(class_of(&r.model), None, &r.certificate, alpha, r.record.attempts);
            st.quotient_artifact(name, Some(realize_special(&r.model)?), Some(&r.certificate), Some(alpha));
        }
        Step::Lacunary { k, beta, alpha } | Step::Dichotomy { k, beta, alpha, .. } => {
            let r = match *step {
                Step::Dichotomy { drop_root, .. } => q_dichotomy(st.metric()?, k, beta, alpha, drop_root, seed)?,
                _ => lacunary_quotient(st.metric()?, k, beta, alpha, seed)?,
            };
            st.set_quotient(r.quotient);
            st.certify(class_of(&r.model), None, &r.certificate, alpha, r.record.attempts);
            st.quotient_artifact(name, Some(realize_special(&r.model)?), Some(&r.certificate), Some(alpha));
        }
        Step::Q2 => {
            let r = q2_lacunary(st.metric()?, seed)?;
            st.set_quotient(r.quotient);
            st.certify(class_of(&r.model), None, &r.certificate, 2.0, r.record.attempts);
            st.quotient_artifact(name, Some(realize_special(&r.model)?), Some(&r.certificate), Some(2.0));
        }
        Step::Aspect { alpha, lipschitz } => {
            let r = aspect_quotient(st.metric()?, alpha, lipschitz, None, seed)?;
            let model = SpecialMetric::Equilateral { n: r.quotient.len(), edge: r.dmin };
            st.set_quotient(r.quotient);
            st.certify("equilateral", None, &r.certificate, alpha, r.record.attempts);
            st.quotient_artifact(name, Some(realize_special(&model)?), Some(&r.certificate), Some(alpha));
        }
        Step::Composition { k, alpha } => {
            let InstanceSpec::Composition { tree } = instance else { unreachable!("validated: composition instance") };
            let r = composition_qs(tree, k, alpha, None, seed)?;
            st.set_quotient(r.quotient);
            st.certify("UM", None, &r.certificate, r.bound, r.record.attempts);
            st.quotient_artifact(name, Some(hst_metric(&r.hst)?), Some(&r.certificate), Some(r.bound));
        }
        Step::CubeQs { eps, p } => {
            let InstanceSpec::Cube { d } = *instance else { unreachable!("validated: cube instance") };
            let r = cube_qs_build(d, eps, p)?;
            st.row.n = Some(1 << d);
            st.row.quotient_size = Some(r.block_count());
            st.row.provenance = Some("QS".into());
            st.certify("lp", Some(p), &r.report, r.bound, 0);
            if !r.size_ok {
                return Err(CliError::Core(metriq_core::MetriqError::Construction(format!("{} blocks, need {}", r.block_count(), r.required_blocks()))));
            }
            if d <= BUNDLE_CUBE_DIM {
                st.quotient = Some(r.to_quotient_space()?);
                st.quotient_artifact(name, None, None, None);
            }
        }
    }
    Ok(())
}

fn hst_metric(t: &metriq_core::hst::Hst) -> Result<MetricSpace> {
    Ok(metriq_core::hst::hst_to_metric(t)?)
}

type TrialOutcome = (TrialRow, Option<TrialFailure>, Vec<Artifact>);

fn run_trial(plan: &ExperimentPlan, t: usize, timing: bool) -> TrialOutcome {
    let seed = Seed::new(plan.seed).child(t as u64);
    let start = Instant::now();
    let mut st = State { row: TrialRow { trial: t, seed: format!("{}:{}", seed.base, seed.stream), ..TrialRow::default() }, ..State::default() };
    let mut failure = None;
    let realize = !matches!(plan.pipeline.first(), Some(Step::CubeQs { .. }));
    if realize {
        match plan.instance.realize(seed.child(0)) {
            Ok(m) => {
                st.row.n = Some(m.len());
                st.metric = Some(m);
            }
            Err(e) => failure = Some(TrialFailure { trial: t, step: "instance".into(), error: e.to_string() }),
        }
    }
    if failure.is_none() {
        for (i, step) in plan.pipeline.iter().enumerate() {
            if let Err(e) = run_step(step, &mut st, &plan.instance, seed.child(i as u64 + 1), &format!("trial{t}")) {
                failure = Some(TrialFailure { trial: t, step: step.name().into(), error: e.to_string() });
                break;
            }
        }
    }
    if timing {
        st.row.millis = Some(start.elapsed().as_millis());
    }
    (st.row, failure, st.artifacts)
}

/// Runs every trial of a validated plan. Operation errors are recorded per trial.
pub fn run_experiment(plan: &ExperimentPlan, timing: bool) -> Result<ReportBundle> {
    plan.validate()?;
    let started_unix = std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
    let clock = Instant::now();
    let outcomes: Vec<TrialOutcome> = (0..plan.trials).into_par_iter().map(|t| run_trial(plan, t, timing)).collect();

    let mut rows = Vec::with_capacity(outcomes.len());
    let mut failures = Vec::new();
    let mut artifacts = Vec::new();
    for (row, fail, arts) in outcomes {
        rows.push(row);
        failures.extend(fail);
        artifacts.extend(arts);
    }
    let failed_trials: Vec<usize> = failures.iter().map(|f| f.trial).collect();
    let ok: Vec<&TrialRow> = rows.iter().filter(|r| !failed_trials.contains(&r.trial)).collect();
    let dist: Vec<f64> = ok.iter().filter_map(|r| r.certified_distortion).collect();
    let sizes: Vec<f64> = ok.iter().filter_map(|r| r.quotient_size.map(|s| s as f64)).collect();
    let bound_violations = rows.iter().filter(|r| matches!((r.certified_distortion, r.paper_bound), (Some(d), Some(b)) if d > b + metriq_core::TOL)).count();
    let summary = Summary {
        seed: plan.seed,
        pipeline: plan.pipeline.iter().map(|s| s.name().to_owned()).collect(),
        trials: plan.trials,
        succeeded: ok.len(),
        failed: failures.len(),
        failure_rate: if plan.trials == 0 { 0.0 } else { failures.len() as f64 / plan.trials as f64 },
        bound_violations,
        distortion: Quantiles::of(&dist),
        quotient_size: Quantiles::of(&sizes),
        failures,
        started_unix,
        elapsed_millis: clock.elapsed().as_millis(),
    };
    Ok(ReportBundle { rows, summary, artifacts: Payload { artifacts } })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn plan(pipeline: Vec<Step>, trials: usize) -> ExperimentPlan {
        ExperimentPlan { instance: InstanceSpec::RandomMetric { n: 30 }, pipeline, trials, seed: 4, outputs: Outputs::default() }
    }

    #[test]
    fn quantiles_interpolate() {
        let q = Quantiles::of(&[4.0, 1.0, 3.0, 2.0, 5.0]).unwrap();
        assert_eq!((q.min, q.q25, q.median, q.q75, q.max, q.mean), (1.0, 2.0, 3.0, 4.0, 5.0, 3.0));
        assert_eq!(Quantiles::of(&[2.0, 4.0]).unwrap().median, 3.0);
        assert!(Quantiles::of(&[]).is_none());
    }

    #[test]
    fn empty_run_is_header_only() {
        let r = run_experiment(&plan(vec![Step::Q2], 0), false).unwrap();
        assert_eq!(r.csv(), format!("{CSV_HEADER}\n"));
        assert_eq!(r.summary.failure_rate, 0.0);
    }

    #[test]
    fn validation_rejects_bad_plans() {
        assert!(plan(vec![], 1).validate().is_err());
        assert!(plan(vec![Step::Hst { m: None }], 1).validate().is_err());
        assert!(plan(vec![Step::Q2, Step::CubeQs { eps: 0.1, p: 2.0 }], 1).validate().is_err());
        assert!(plan(vec![Step::Mcenter { eps: 1.5 }], 1).validate().is_err());
        assert!(plan(vec![Step::Mcenter { eps: 0.3 }, Step::Hst { m: None }], 1).validate().is_ok());
    }

    #[test]
    fn rows_follow_trial_order() {
        let r = run_experiment(&plan(vec![Step::Q2], 12), false).unwrap();
        let idx: Vec<usize> = r.rows.iter().map(|r| r.trial).collect();
        assert_eq!(idx, (0..12).collect::<Vec<_>>());
        assert!(r.rows.iter().all(|r| r.certified_distortion.unwrap() <= 2.0 + 1e-9));
    }

    #[test]
    fn failures_are_recorded_not_raised() {
        let p = ExperimentPlan { instance: InstanceSpec::RandomMetric { n: 1 }, ..plan(vec![Step::Q2], 3) };
        let r = run_experiment(&p, false).unwrap();
        assert_eq!(r.summary.failed, 3);
        assert_eq!(r.summary.failure_rate, 1.0);
        assert_eq!(r.rows.len(), 3);
    }
}
