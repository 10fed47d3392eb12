use metriq_core::generators::{gen_ktuple_free_family, gen_random_graph_metric, random_composition_tree, random_metric, InstanceSpec};
use metriq_core::hst::line_um_lower_bound;
use metriq_core::metric::{realize_special, validate_metric, MetricSpace, SpecialMetric};
use metriq_core::quotient::distortion_identity;
use metriq_core::Seed;
use rand::Rng;

fn specs(seed: Seed) -> Vec<InstanceSpec> {
    let mut rng = seed.rng();
    let base = random_metric(rng.random_range(2..6), seed.child(1));
    let inner = random_metric(3, seed.child(2));
    let outer = random_metric(3, seed.child(3));
    let mu = 2.0 * metriq_core::metric::aspect_ratio(&inner).unwrap() + 0.5;
    let theta = 2.0 * mu.powi(3) * 2.0 / 1.0 + 1.0;
    vec![
        InstanceSpec::PaddedCopies { base, copies: rng.random_range(1..4), beta: None },
        InstanceSpec::RandomGraph { n: rng.random_range(1..30), q: rng.random() },
        InstanceSpec::Composition { tree: random_composition_tree(rng.random_range(1..3), 3, 4.0, seed.child(4)).unwrap() },
        InstanceSpec::LipCompProduct { outer, inner, mu, theta, alpha: 2.0 },
        InstanceSpec::Cube { d: rng.random_range(1..6) },
        InstanceSpec::Star { n: rng.random_range(1..10), tau: rng.random_range(0.05..=2.0) },
        InstanceSpec::Lacunary { a: vec![64.0, 16.0, 4.0, 1.0], k: 4.0 },
        InstanceSpec::RandomMetric { n: rng.random_range(1..20) },
        InstanceSpec::RandomEuclidean { n: rng.random_range(1..20), dim: rng.random_range(1..4) },
    ]
}

#[test]
fn every_variant_validates_across_seeds() {
    for s in 0..100 {
        for spec in specs(Seed::new(s)) {
            let m = spec.realize(Seed::new(s)).unwrap_or_else(|e| panic!("{} seed {s}: {e}", spec.name()));
            assert!(validate_metric(&m).is_valid(), "{} seed {s}", spec.name());
        }
    }
}

#[test]
fn specs_round_trip_through_json() {
    for spec in specs(Seed::new(7)) {
        let back: InstanceSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
        assert_eq!(back, spec);
    }
}

#[test]
fn generators_are_deterministic() {
    for spec in specs(Seed::new(3)) {
        assert_eq!(spec.realize(Seed::new(9)).unwrap(), spec.realize(Seed::new(9)).unwrap());
    }
    let a = gen_random_graph_metric(30, 0.5, Seed::new(1)).unwrap();
    assert_eq!(a, gen_random_graph_metric(30, 0.5, Seed::new(1)).unwrap());
}

#[test]
fn tuple_families_intersect_in_at_most_one_point() {
    for m in 1..=8 {
        for n in (4 * m..=400).step_by(3) {
            let s = n / (4 * m);
            let f = match gen_ktuple_free_family(n, m) {
                Ok(f) => f,
                Err(e) => {
                    assert!(s < 2 * m && s > 2, "n={n} m={m}: {e}");
                    continue;
                }
            };
            assert_eq!(f.len(), s * s, "n={n} m={m}");
            for (i, a) in f.iter().enumerate() {
                assert_eq!(a.len(), 2 * m);
                assert!(a.iter().all(|&x| x < n));
                for b in &f[i + 1..] {
                    assert!(a.iter().filter(|x| b.contains(x)).count() <= 1, "n={n} m={m}");
                }
            }
        }
    }
    assert!(gen_ktuple_free_family(7, 2).is_err());
}

#[test]
fn infeasible_tuple_family_is_a_construction_error() {
    // Nine 14-tuples sharing at most one element pairwise need 9 * 14 - 36 = 90 elements.
    let e = gen_ktuple_free_family(84, 7).unwrap_err();
    assert!(matches!(e, metriq_core::MetriqError::Construction(_)));
}

#[test]
fn equilateral_is_optimal_for_evenly_spaced_lines() {
    let mut rng = Seed::new(11).rng();
    for n in 2..=12 {
        let mut a = vec![0.0];
        for _ in 1..n {
            let last = *a.last().unwrap();
            a.push(last + rng.random_range(0.1..3.0));
        }
        for pts in [(1..=n).map(|i| i as f64).collect::<Vec<_>>(), a] {
            let line = MetricSpace::from_fn(n, |i, j| (pts[i] - pts[j]).abs());
            let span = pts[n - 1] - pts[0];
            let eq = realize_special(&SpecialMetric::Equilateral { n, edge: span }).unwrap();
            let gap = pts.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
            let dist = distortion_identity(&line, &eq).unwrap().distortion;
            assert!((dist - span / gap).abs() <= 1e-9 * dist);
            assert!(dist >= line_um_lower_bound(&pts).unwrap() - 1e-9);
        }
        let unit: Vec<f64> = (1..=n).map(|i| i as f64).collect();
        assert_eq!(line_um_lower_bound(&unit).unwrap(), (n - 1) as f64);
    }
}
