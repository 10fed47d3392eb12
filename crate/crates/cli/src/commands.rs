use crate::args::{
    Certify, Command, Construct, CubeQsArgs, Embed, Format, GenArgs, Global, Mode, PointsIn, QuotientArgs, TransformArgs, TransformKind, Variant,
};
use crate::bundle::{seal, verify_bundle};
use crate::error::{usage, CliError, Result};
use crate::experiment::{run_experiment, ExperimentPlan};
use crate::io::{read_json, read_metric, read_text, write_text, Output};
use metriq_core::constructions::aspect::aspect_quotient;
use metriq_core::constructions::composition::{composition_qs, CompositionTree};
use metriq_core::constructions::dichotomy::{lacunary_quotient, q2_lacunary, q_dichotomy};
use metriq_core::constructions::mcenter::{find_m_center, hst_from_m_centered, m_center_quotient};
use metriq_core::constructions::star::find_star_quotient;
use metriq_core::cube::{cube_qs_certify_lower, cube_qs_construct, CubeQsError, CubeQsResult};
use metriq_core::embed::bourgain::bourgain_embed;
use metriq_core::embed::gauss::{truncated_gauss_distance, truncated_gauss_embed, SnowflakeTransform};
use metriq_core::embed::pstable::{pstable_distance, pstable_embed, uptolog_distance, uptolog_embed};
use metriq_core::embed::star_lp::star_to_lp;
use metriq_core::embed::{EmbedMode, VectorEmbedding};
use metriq_core::generators::{random_composition_tree, random_metric, InstanceSpec};
use metriq_core::lipschitz::{certify_lip_quotient, lip_colip, QuotientMap};
use metriq_core::metric::{aspect_ratio, FiniteMetric};
use metriq_core::quotient::{distortion_between, distortion_identity, quotient_by_subset, quotient_metric, sq_space};
use metriq_core::{MetricSpace, Provenance, QuotientSpace, Seed};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use std::path::Path;

/// A command's output and whether every check it ran passed.
#[derive(Debug)]
pub struct Outcome {
    pub output: Output,
    pub ok: bool,
}

impl From<Output> for Outcome {
    fn from(output: Output) -> Self {
        Outcome { output, ok: true }
    }
}

pub fn execute(command: Command, g: &Global) -> Result<Outcome> {
    match command {
        Command::Gen(a) => Ok(Output::Metric(generate(&a, Seed::new(g.seed))?).into()),
        Command::Quotient(a) => Ok(Output::doc(quotient(&a)?)?.into()),
        Command::Construct(c) => Ok(repeat(g, |s| construct(&c, s))?.into()),
        Command::Embed(e) => Ok(repeat(g, |s| embed(&e, s))?.into()),
        Command::CubeQs(a) => cube_qs(&a),
        Command::Certify(c) => certify(&c, g.tolerance),
        Command::Transform(a) => Ok(Output::doc(transform(&a)?)?.into()),
        Command::Run(a) => {
            let mut plan: ExperimentPlan = read_json(&a.plan)?;
            if let Some(t) = g.trials {
                plan.trials = t;
            }
            let report = run_experiment(&plan, a.timing)?;
            if let Some(p) = a.summary.as_ref().or(plan.outputs.summary.as_ref()) {
                write_text(p, &(serde_json::to_string_pretty(&report.summary)? + "\n"))?;
            }
            if let Some(p) = a.bundle.as_ref().or(plan.outputs.bundle.as_ref()) {
                write_text(p, &(serde_json::to_string(&seal(&report.artifacts)?)? + "\n"))?;
            }
            let ok = report.summary.failed == 0 && report.summary.bound_violations == 0;
            let output = match g.format {
                Format::Csv => Output::Text(report.csv()),
                Format::Json => Output::doc(json!({ "rows": report.rows, "summary": report.summary }))?,
            };
            if g.out.is_none() {
                if let Some(p) = &plan.outputs.csv {
                    write_text(p, &report.csv())?;
                    return Ok(Outcome { output: Output::Text(String::new()), ok });
                }
            }
            Ok(Outcome { output, ok })
        }
        Command::Verify(a) => {
            let bundle: Value = read_json(&a.bundle)?;
            let report = verify_bundle(&bundle, g.tolerance, Seed::new(g.seed).child(u64::MAX))?;
            let ok = report.is_clean();
            Ok(Outcome { output: Output::doc(report)?, ok })
        }
    }
}

/// Runs `f` once with the base seed, or once per trial with child seeds as a JSON array.
fn repeat(g: &Global, f: impl Fn(Seed) -> Result<Value> + Sync) -> Result<Output> {
    match g.trials {
        None | Some(1) => Ok(Output::Doc(f(Seed::new(g.seed))?)),
        Some(t) => {
            let all: Result<Vec<Value>> = (0..t as u64).into_par_iter().map(|i| f(Seed::new(g.seed).child(i))).collect();
            Ok(Output::Doc(Value::Array(all?)))
        }
    }
}

fn to_value(v: impl Serialize) -> Result<Value> {
    Ok(serde_json::to_value(v)?)
}

pub fn generate(a: &GenArgs, seed: Seed) -> Result<MetricSpace> {
    if let Some(p) = &a.spec {
        let spec: InstanceSpec = read_json(p)?;
        return Ok(spec.realize(seed)?);
    }
    let spec = match a.variant.expect("clap requires variant or spec") {
        Variant::Padded => {
            let base = match &a.base {
                Some(p) => read_metric(p)?,
                None => random_metric(a.n, seed.child(1)),
            };
            InstanceSpec::PaddedCopies { base, copies: a.copies, beta: a.beta }
        }
        Variant::Gnp => InstanceSpec::RandomGraph { n: a.n, q: a.q },
        Variant::Composition => InstanceSpec::Composition { tree: random_composition_tree(a.depth, a.fanout, a.beta.unwrap_or(4.0), seed)? },
        Variant::Lipcomp => {
            let outer = match &a.outer {
                Some(p) => read_metric(p)?,
                None => random_metric(3, seed.child(1)),
            };
            let inner = match &a.inner {
                Some(p) => read_metric(p)?,
                None => random_metric(3, seed.child(2)),
            };
            let phi = if inner.len() > 1 { aspect_ratio(&inner)? } else { 1.0 };
            let mu = a.mu.unwrap_or(a.alpha * phi + 1.0);
            let theta = match (a.theta, outer.min_distance()) {
                (Some(t), _) => t,
                (None, Some(dmin)) => a.alpha * mu.powi(outer.len() as i32) * inner.diameter() / dmin,
                (None, None) => 1.0,
            };
            InstanceSpec::LipCompProduct { outer, inner, mu, theta, alpha: a.alpha }
        }
        Variant::Cube => InstanceSpec::Cube { d: a.d },
        Variant::Star => InstanceSpec::Star { n: a.n, tau: a.tau },
        Variant::Lacunary => {
            if a.a.is_empty() {
                return usage("lacunary needs --a");
            }
            InstanceSpec::Lacunary { a: a.a.clone(), k: a.k }
        }
        Variant::Random => InstanceSpec::RandomMetric { n: a.n },
        Variant::Euclidean => InstanceSpec::RandomEuclidean { n: a.n, dim: a.dim },
    };
    Ok(spec.realize(seed)?)
}

fn quotient(a: &QuotientArgs) -> Result<QuotientSpace> {
    let m = read_metric(&a.metric)?;
    let (base, relabel): (MetricSpace, Box<dyn Fn(usize) -> Result<usize>>) = if a.restrict.is_empty() {
        (m, Box::new(Ok))
    } else {
        let keep = a.restrict.clone();
        let sub = m.subspace(&keep)?;
        (sub, Box::new(move |x| keep.iter().position(|&y| y == x).ok_or_else(|| CliError::Usage(format!("point {x} is not in --restrict")))))
    };
    let mut q = match (&a.blocks, a.subset.is_empty()) {
        (Some(b), _) => {
            let blocks: Vec<Vec<usize>> = serde_json::from_str(b)?;
            let blocks = blocks.into_iter().map(|b| b.into_iter().map(&relabel).collect::<Result<Vec<_>>>()).collect::<Result<Vec<_>>>()?;
            quotient_metric(&base, blocks)?
        }
        (None, false) => {
            let subset = a.subset.iter().map(|&x| relabel(x)).collect::<Result<Vec<_>>>()?;
            quotient_by_subset(&base, &subset)?
        }
        (None, true) => return usage("give --blocks or --subset"),
    };
    if !a.restrict.is_empty() {
        q.provenance = Provenance::QS;
    }
    if !a.keep.is_empty() {
        q = sq_space(&q, &a.keep)?;
    }
    Ok(q)
}

fn smallest_center_parameter(m: &MetricSpace) -> usize {
    (1..=m.len()).find(|&k| find_m_center(m, k as f64).is_some()).unwrap_or(m.len())
}

fn construct(c: &Construct, seed: Seed) -> Result<Value> {
    let weights = |w: &Vec<f64>| (!w.is_empty()).then(|| w.clone());
    match c {
        Construct::Mcenter { input, eps } => to_value(m_center_quotient(&read_metric(&input.metric)?, *eps, seed)?),
        Construct::Hst { input, m } => {
            let metric = read_metric(&input.metric)?;
            let m = m.unwrap_or_else(|| smallest_center_parameter(&metric));
            to_value(hst_from_m_centered(&metric, m)?)
        }
        Construct::Star { input, a, b, alpha } => to_value(find_star_quotient(&read_metric(&input.metric)?, *a, *b, *alpha, seed)?),
        Construct::Lacunary { input, k, beta, alpha } => to_value(lacunary_quotient(&read_metric(&input.metric)?, *k, *beta, *alpha, seed)?),
        Construct::Dichotomy { input, k, beta, alpha, drop_root } => to_value(q_dichotomy(&read_metric(&input.metric)?, *k, *beta, *alpha, *drop_root, seed)?),
        Construct::Q2 { input } => to_value(q2_lacunary(&read_metric(&input.metric)?, seed)?),
        Construct::Aspect { input, alpha, lipschitz, weights: w } => {
            let w = weights(w);
            to_value(aspect_quotient(&read_metric(&input.metric)?, *alpha, *lipschitz, w.as_deref(), seed)?)
        }
        Construct::Composition { tree, k, alpha, weights: w } => {
            let tree: CompositionTree = read_json(tree)?;
            let w = weights(w);
            to_value(composition_qs(&tree, *k, *alpha, w.as_deref(), seed)?)
        }
    }
}

fn read_points(p: &Path) -> Result<Vec<Vec<f64>>> {
    read_json(p)
}

/// Largest relative gap between sampled feature distances and `exact`.
fn feature_error(e: &VectorEmbedding, exact: impl Fn(usize, usize) -> Result<f64>) -> Result<f64> {
    let mut worst = 0.0f64;
    for i in 0..e.len() {
        for j in i + 1..e.len() {
            let t = exact(i, j)?;
            if t > 0.0 {
                worst = worst.max((e.dist(i, j) - t).abs() / t);
            }
        }
    }
    Ok(worst)
}

fn euclid(x: &[f64], y: &[f64], p: f64) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b).abs().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn embed(e: &Embed, seed: Seed) -> Result<Value> {
    match e {
        Embed::Bourgain { input, p, m, mode } => {
            let metric = read_metric(&input.metric)?;
            let m = m.unwrap_or(metric.len() as f64);
            let mode = mode.map(|x| match x {
                Mode::Exact => EmbedMode::Exact,
                Mode::MonteCarlo => EmbedMode::MonteCarlo,
            });
            to_value(bourgain_embed(&metric, m, *p, mode, seed)?)
        }
        Embed::Star { n, tau, p } => {
            let emb = star_to_lp(*n, *tau, *p)?;
            let star = metriq_core::metric::realize_special(&metriq_core::SpecialMetric::Star { n: *n, tau: *tau })?;
            let certificate = distortion_identity(&star, &emb)?;
            Ok(json!({ "embedding": emb, "certificate": certificate }))
        }
        Embed::GaussTrunc { input: PointsIn { points, level, features } } => {
            let pts = read_points(points)?;
            let emb = truncated_gauss_embed(&pts, *level, *features, seed)?;
            let err = feature_error(&emb, |i, j| Ok(truncated_gauss_distance(euclid(&pts[i], &pts[j], 2.0), *level)))?;
            Ok(json!({ "level": level, "features": features, "max_relative_error": err, "embedding": emb }))
        }
        Embed::Pstable { input: PointsIn { points, level, features }, p } => {
            let pts = read_points(points)?;
            let emb = pstable_embed(&pts, *level, *p, *features, seed)?;
            let err = feature_error(&emb, |i, j| Ok(pstable_distance(euclid(&pts[i], &pts[j], *p), *level, *p)?))?;
            Ok(json!({ "level": level, "p": p, "features": features, "max_relative_error": err, "embedding": emb }))
        }
        Embed::Uptolog { input: PointsIn { points, level, features }, p, materialize } => {
            let pts = read_points(points)?;
            to_value(uptolog_embed(&pts, *level, *p, materialize.then_some(*features), seed)?)
        }
    }
}

fn cube_qs(a: &CubeQsArgs) -> Result<Outcome> {
    match cube_qs_construct(a.d, a.eps, a.p) {
        Ok(r) => Ok(Output::doc(r)?.into()),
        Err(CubeQsError::Shortfall(r)) if a.allow_shortfall => Ok(Outcome { output: Output::doc(*r)?, ok: false }),
        Err(e) => Err(CliError::Core(e.into())),
    }
}

fn certify(c: &Certify, tol: f64) -> Result<Outcome> {
    match c {
        Certify::Distortion { source, target, map } => {
            let (s, t) = (read_metric(source)?, read_metric(target)?);
            let report = if map.is_empty() { distortion_identity(&s, &t)? } else { distortion_between(&s, &t, map)? };
            Ok(Output::doc(report)?.into())
        }
        Certify::Lipq { map, alpha } => {
            let q = QuotientMap::from_json(&read_text(map)?)?;
            match alpha {
                Some(alpha) => {
                    let cert = certify_lip_quotient(&q, *alpha)?;
                    let ok = cert.constants.product <= alpha + tol;
                    Ok(Outcome { output: Output::doc(cert)?, ok })
                }
                None => Ok(Output::doc(lip_colip(&q)?)?.into()),
            }
        }
        Certify::CubeLower { quotient, p } => {
            let v: Value = read_json(quotient)?;
            let q = if v.get("singletons").is_some() {
                let mut r: CubeQsResult = serde_json::from_value(v)?;
                r.restore();
                r.to_quotient_space()?
            } else {
                QuotientSpace::from_value(v)?
            };
            Ok(Output::doc(cube_qs_certify_lower(&q, *p)?)?.into())
        }
    }
}

fn transform(a: &TransformArgs) -> Result<Value> {
    let value = match a.kind {
        TransformKind::GaussTrunc => truncated_gauss_distance(a.dist, a.level),
        TransformKind::Pstable => pstable_distance(a.dist, a.level, a.p)?,
        TransformKind::Uptolog => uptolog_distance(a.dist, a.level, a.p)?,
        TransformKind::Snowflake => SnowflakeTransform::new(a.level)?.apply(a.dist),
    };
    let kind = match a.kind {
        TransformKind::GaussTrunc => "gauss-trunc",
        TransformKind::Pstable => "pstable",
        TransformKind::Uptolog => "uptolog",
        TransformKind::Snowflake => "snowflake",
    };
    let mut out = json!({ "kind": kind, "D": a.level, "d": a.dist, "value": value });
    if matches!(a.kind, TransformKind::Pstable | TransformKind::Uptolog) {
        out["p"] = json!(a.p);
    }
    Ok(out)
}
