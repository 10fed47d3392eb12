use metriq_cli::bundle::{seal, verify_bundle, Artifact, FeatureFamily, PairValue, Payload};
use metriq_cli::experiment::{run_experiment, ExperimentPlan, Outputs, Step, CSV_HEADER};
use metriq_cli::CliError;
use metriq_core::embed::gauss::truncated_gauss_embed;
use metriq_core::generators::InstanceSpec;
use metriq_core::{FiniteMetric, Seed};
use std::process::Command;

fn plan(instance: InstanceSpec, pipeline: Vec<Step>, trials: usize, seed: u64) -> ExperimentPlan {
    ExperimentPlan { instance, pipeline, trials, seed, outputs: Outputs::default() }
}

fn cell<'a>(line: &'a str, col: &str) -> &'a str {
    let idx = CSV_HEADER.split(',').position(|c| c == col).unwrap();
    line.split(',').nth(idx).unwrap()
}

#[test]
fn lacunary_plan_certifies_every_trial() {
    let r = run_experiment(&plan(InstanceSpec::RandomMetric { n: 100 }, vec![Step::Q2], 50, 11), false).unwrap();
    let csv = r.csv();
    let lines: Vec<&str> = csv.lines().skip(1).collect();
    assert_eq!(lines.len(), 50);
    for l in lines {
        assert!(cell(l, "certified_distortion").parse::<f64>().unwrap() <= 2.0 + 1e-9);
        assert!(cell(l, "quotient_size").parse::<usize>().unwrap() >= 26);
        assert_eq!(cell(l, "target_class"), "lacunary");
        assert_eq!(cell(l, "millis"), "");
    }
    assert_eq!(r.summary.failed, 0);
    assert_eq!(r.summary.bound_violations, 0);
}

#[test]
fn cube_grid_reports_size_and_distortion() {
    for d in 8..=10 {
        let r = run_experiment(&plan(InstanceSpec::Cube { d }, vec![Step::CubeQs { eps: 0.2, p: 2.0 }], 1, 0), false).unwrap();
        let row = &r.rows[0];
        assert_eq!(row.n, Some(1 << d));
        assert!(row.quotient_size.is_some());
        if let Some(dist) = row.certified_distortion {
            assert!(dist <= row.paper_bound.unwrap());
        }
    }
}

#[test]
fn empty_plan_writes_header_only() {
    let r = run_experiment(&plan(InstanceSpec::RandomMetric { n: 10 }, vec![Step::Q2], 0, 0), false).unwrap();
    assert_eq!(r.csv(), format!("{CSV_HEADER}\n"));
}

#[test]
fn same_plan_same_bytes() {
    let p = plan(InstanceSpec::RandomEuclidean { n: 40, dim: 3 }, vec![Step::Mcenter { eps: 0.3 }, Step::Hst { m: None }], 8, 5);
    let a = run_experiment(&p, false).unwrap();
    let b = run_experiment(&p, false).unwrap();
    assert_eq!(a.csv(), b.csv());
    assert_eq!(serde_json::to_string(&seal(&a.artifacts).unwrap()).unwrap(), serde_json::to_string(&seal(&b.artifacts).unwrap()).unwrap());
    let other = run_experiment(&ExperimentPlan { seed: 6, ..p }, false).unwrap();
    assert_ne!(a.csv(), other.csv());
}

#[test]
fn clean_run_bundle_verifies() {
    let p = plan(InstanceSpec::RandomMetric { n: 30 }, vec![Step::Q2], 4, 2);
    let bundle = seal(&run_experiment(&p, false).unwrap().artifacts).unwrap();
    let report = verify_bundle(&bundle, 1e-9, Seed::new(99)).unwrap();
    assert_eq!(report.artifacts, 4);
    assert!(report.is_clean(), "{:?}", report.issues);
}

#[test]
fn tampered_distance_is_flagged_at_its_pair() {
    let p = plan(InstanceSpec::RandomMetric { n: 30 }, vec![Step::Q2], 1, 2);
    let mut payload = run_experiment(&p, false).unwrap().artifacts;
    let Artifact::Quotient { quotient, .. } = &mut payload.artifacts[0] else { panic!("expected a quotient") };
    let mut rows = quotient.metric.rows();
    rows[1][3] *= 1.01;
    rows[3][1] = rows[1][3];
    quotient.metric = metriq_core::MetricSpace::from_rows(rows).unwrap();
    let report = verify_bundle(&seal(&payload).unwrap(), 1e-9, Seed::new(1)).unwrap();
    let flagged: Vec<_> = report.issues.iter().filter(|i| i.check == "distance").map(|i| i.pair).collect();
    assert_eq!(flagged, vec![Some((1, 3))]);
}

#[test]
fn unsealed_edit_is_a_structural_error() {
    let p = plan(InstanceSpec::RandomMetric { n: 12 }, vec![Step::Q2], 1, 2);
    let mut bundle = seal(&run_experiment(&p, false).unwrap().artifacts).unwrap();
    bundle["payload"]["artifacts"][0]["quotient"]["dist"][0][1] = serde_json::json!(9.0);
    assert!(matches!(verify_bundle(&bundle, 1e-9, Seed::new(1)), Err(CliError::Structural(_))));
}

fn feature_bundle(corrupt: bool) -> serde_json::Value {
    let points: Vec<Vec<f64>> = (0..6).map(|i| vec![i as f64 * 0.5, (i % 2) as f64, (i * i % 5) as f64 * 0.3]).collect();
    let seed = Seed::new(8);
    let e = truncated_gauss_embed(&points, 2.0, 20_000, seed).unwrap();
    let mut distances: Vec<PairValue> = (0..6).flat_map(|i| (i + 1..6).map(move |j| (i, j))).map(|(i, j)| PairValue { i, j, value: e.dist(i, j) }).collect();
    if corrupt {
        distances[4].value *= 1.5;
    }
    let a = Artifact::Features { name: "gauss".into(), points, level: 2.0, family: FeatureFamily::Gauss, features: 20_000, seed, distances, rtol: 0.05 };
    seal(&Payload { artifacts: vec![a] }).unwrap()
}

#[test]
fn monte_carlo_artifact_resamples_within_tolerance() {
    let report = verify_bundle(&feature_bundle(false), 1e-9, Seed::new(1234)).unwrap();
    assert!(report.is_clean(), "{:?}", report.issues);
    let bad = verify_bundle(&feature_bundle(true), 1e-9, Seed::new(1234)).unwrap();
    assert_eq!(bad.issues.len(), 1);
    assert_eq!(bad.issues[0].check, "resample");
}

fn metriq(dir: &std::path::Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_metriq")).current_dir(dir).args(args).output().unwrap()
}

#[test]
fn binary_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let out = metriq(d, &["--seed", "4", "gen", "--variant", "random", "--n", "12", "--out", "m.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = metriq(d, &["quotient", "--metric", "m.json", "--subset", "0,1", "--keep", "0,1,2"]);
    assert!(out.status.success());
    let q: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(q["provenance"], "SQ");

    let out = metriq(d, &["certify", "distortion", "--source", "m.json", "--target", "m.json"]);
    let r: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(r["distortion"], 1.0);

    let out = metriq(d, &["transform", "--kind", "gauss-trunc", "--D", "4", "--d", "0"]);
    let t: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(t["value"], 0.0);

    let out = metriq(d, &["--format", "csv", "gen", "--variant", "cube", "--d", "2"]);
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().next().unwrap(), "0,1,1,2");
}

#[test]
fn binary_run_and_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let plan = r#"{"instance": {"variant": "random_metric", "n": 24}, "pipeline": [{"op": "aspect", "alpha": 2.0}], "trials": 3, "seed": 1}"#;
    std::fs::write(d.join("plan.json"), plan).unwrap();
    let out = metriq(d, &["--format", "csv", "--out", "a.csv", "run", "--plan", "plan.json", "--bundle", "b.json", "--summary", "s.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(d.join("a.csv")).unwrap();
    assert_eq!(csv.lines().count(), 4);
    assert!(csv.starts_with(CSV_HEADER));
    let summary: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(d.join("s.json")).unwrap()).unwrap();
    assert_eq!(summary["trials"], 3);

    let out = metriq(d, &["verify", "--bundle", "b.json"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));

    let text = std::fs::read_to_string(d.join("b.json")).unwrap();
    std::fs::write(d.join("b.json"), text.replacen("\"checksum\":\"", "\"checksum\":\"0", 1)).unwrap();
    let out = metriq(d, &["verify", "--bundle", "b.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("checksum"));
}

#[test]
fn bad_plan_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("plan.json"), r#"{"instance": {"variant": "random_metric", "n": 24}, "pipeline": [{"op": "hst"}], "trials": 3}"#).unwrap();
    let out = metriq(d, &["run", "--plan", "plan.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("invalid plan"));
}

#[test]
fn construct_trials_use_child_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    metriq(d, &["gen", "--variant", "random", "--n", "40", "--out", "m.json"]);
    let out = metriq(d, &["--trials", "3", "construct", "mcenter", "--metric", "m.json", "--eps", "0.3"]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let streams: Vec<u64> = v.as_array().unwrap().iter().map(|r| r["record"]["seed"]["stream"].as_u64().unwrap()).collect();
    assert_eq!(streams, vec![0, 1, 2]);
}
