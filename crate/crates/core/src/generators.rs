//! Seedable generators for structured and adversarial metric families.

use crate::constructions::composition::{CompositionChild, CompositionTree};
use crate::cube::hamming_cube;
use crate::error::{param, Result};
use crate::metric::{aspect_ratio, realize_special, shortest_path_closure, FiniteMetric, MetricSpace, SpecialMetric};
use crate::rng::Seed;
use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Every family the command line can realize.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", rename_all = "snake_case")]
pub enum InstanceSpec {
    PaddedCopies {
        base: MetricSpace,
        copies: usize,
        /// Defaults to the diameter of `base`.
        #[serde(default)]
        beta: Option<f64>,
    },
    RandomGraph {
        n: usize,
        q: f64,
    },
    Composition {
        tree: CompositionTree,
    },
    LipCompProduct {
        outer: MetricSpace,
        inner: MetricSpace,
        mu: f64,
        theta: f64,
        alpha: f64,
    },
    Cube {
        d: usize,
    },
    Star {
        n: usize,
        tau: f64,
    },
    Lacunary {
        a: Vec<f64>,
        k: f64,
    },
    /// Shortest-path metric of a complete graph with uniform weights in `[1, 2)`.
    RandomMetric {
        n: usize,
    },
    /// Uniform points in the unit cube of `R^dim`.
    RandomEuclidean {
        n: usize,
        dim: usize,
    },
}

impl InstanceSpec {
    pub fn realize(&self, seed: Seed) -> Result<MetricSpace> {
        match self {
            InstanceSpec::PaddedCopies { base, copies, beta } => gen_padded_copies(base, *copies, *beta),
            InstanceSpec::RandomGraph { n, q } => Ok(gen_random_graph_metric(*n, *q, seed)?.metric),
            InstanceSpec::Composition { tree } => Ok(gen_composition(tree)?.0),
            InstanceSpec::LipCompProduct { outer, inner, mu, theta, alpha } => gen_lipcomp_product(outer, inner, *mu, *theta, *alpha),
            InstanceSpec::Cube { d } => hamming_cube(*d),
            InstanceSpec::Star { n, tau } => realize_special(&SpecialMetric::Star { n: *n, tau: *tau }),
            InstanceSpec::Lacunary { a, k } => realize_special(&SpecialMetric::Lacunary { a: a.clone(), k: *k }),
            InstanceSpec::RandomMetric { n } => Ok(random_metric(*n, seed)),
            InstanceSpec::RandomEuclidean { n, dim } => Ok(random_euclidean(*n, *dim, seed)),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            InstanceSpec::PaddedCopies { .. } => "padded",
            InstanceSpec::RandomGraph { .. } => "gnp",
            InstanceSpec::Composition { .. } => "composition",
            InstanceSpec::LipCompProduct { .. } => "lipcomp",
            InstanceSpec::Cube { .. } => "cube",
            InstanceSpec::Star { .. } => "star",
            InstanceSpec::Lacunary { .. } => "lacunary",
            InstanceSpec::RandomMetric { .. } => "random",
            InstanceSpec::RandomEuclidean { .. } => "euclidean",
        }
    }
}

pub fn random_metric(n: usize, seed: Seed) -> MetricSpace {
    let mut rng = seed.rng();
    let mut w = vec![0.0; n * n];
    for i in 0..n {
        for j in i + 1..n {
            let x = rng.random_range(1.0..2.0);
            w[i * n + j] = x;
            w[j * n + i] = x;
        }
    }
    shortest_path_closure(n, &mut w);
    MetricSpace::from_flat(n, w).expect("square matrix")
}

pub fn random_euclidean(n: usize, dim: usize, seed: Seed) -> MetricSpace {
    let mut rng = seed.rng();
    let pts: Vec<Vec<f64>> = (0..n).map(|_| (0..dim).map(|_| rng.random::<f64>()).collect()).collect();
    MetricSpace::from_fn(n, |i, j| pts[i].iter().zip(&pts[j]).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
}

/// `copies` copies of `x`, with points in different copies at distance `beta`.
///
/// Point `(p, c)` has index `c * |x| + p`.
pub fn gen_padded_copies(x: &MetricSpace, copies: usize, beta: Option<f64>) -> Result<MetricSpace> {
    let diam = x.diameter();
    let beta = beta.unwrap_or(diam);
    if copies == 0 {
        return param("need at least one copy");
    }
    if beta < diam || !(beta > 0.0) {
        return param(format!("beta = {beta} is below the diameter {diam}"));
    }
    let n = x.len();
    Ok(MetricSpace::from_fn(n * copies, |u, v| if u / n == v / n { x.dist(u % n, v % n) } else { beta }))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GraphMetric {
    pub metric: MetricSpace,
    pub edges: Vec<(usize, usize)>,
}

/// Distance 1 along edges of `G(n, q)` and 2 otherwise. `q = 0` and `q = 1` are allowed.
pub fn gen_random_graph_metric(n: usize, q: f64, seed: Seed) -> Result<GraphMetric> {
    if !(0.0..=1.0).contains(&q) {
        return param(format!("edge probability must lie in [0, 1], got {q}"));
    }
    let mut rng = seed.rng();
    let mut adj = vec![false; n * n];
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.random::<f64>() < q {
                adj[i * n + j] = true;
                edges.push((i, j));
            }
        }
    }
    let metric = MetricSpace::from_fn(n, |i, j| if adj[i.min(j) * n + i.max(j)] { 1.0 } else { 2.0 });
    Ok(GraphMetric { metric, edges })
}

/// Composed metric and the scale `gamma` of every node, in preorder.
pub fn gen_composition(tree: &CompositionTree) -> Result<(MetricSpace, Vec<f64>)> {
    fn gammas(t: &CompositionTree, out: &mut Vec<f64>) -> Result<()> {
        out.push(t.realize()?.1);
        for c in &t.children {
            if let CompositionChild::Tree(s) = c {
                gammas(s, out)?;
            }
        }
        Ok(())
    }
    let (m, _) = tree.realize()?;
    let mut g = Vec::new();
    gammas(tree, &mut g)?;
    Ok((m, g))
}

/// A random composition tree of the given depth whose spaces have aspect ratio below 2.
///
/// Every node uses `beta`; leaves hold between 1 and `max_fanout` points.
pub fn random_composition_tree(depth: usize, max_fanout: usize, beta: f64, seed: Seed) -> Result<CompositionTree> {
    if depth == 0 || max_fanout < 2 {
        return param("need depth >= 1 and fanout >= 2");
    }
    let mut rng = seed.rng();
    let fan = rng.random_range(2..=max_fanout);
    let outer = random_metric(fan, seed.child(0));
    let children = (0..fan)
        .map(|z| {
            let s = seed.child(z as u64 + 1);
            if depth == 1 {
                let size = s.rng().random_range(1..=max_fanout);
                Ok(CompositionChild::Space(random_metric(size, s.child(0))))
            } else {
                Ok(CompositionChild::Tree(Box::new(random_composition_tree(depth - 1, max_fanout, beta, s)?)))
            }
        })
        .collect::<Result<_>>()?;
    Ok(CompositionTree { outer, beta, children })
}

/// Levels `1..=k` of `inner` scaled by `mu^i`, joined at `theta * d_outer(i, j)`.
///
/// Requires `mu > alpha * aspect(inner)` and `theta >= alpha * mu^k * diam(inner) / min d_outer`.
/// Point `(y, i)` has index `(i - 1) * |inner| + y`.
pub fn gen_lipcomp_product(outer: &MetricSpace, inner: &MetricSpace, mu: f64, theta: f64, alpha: f64) -> Result<MetricSpace> {
    let k = outer.len();
    if k == 0 || inner.is_empty() {
        return param("outer and inner spaces must be nonempty");
    }
    let phi = if inner.len() > 1 { aspect_ratio(inner)? } else { 1.0 };
    if !(mu > alpha * phi) {
        return param(format!("mu = {mu} must exceed alpha * aspect = {}", alpha * phi));
    }
    if k > 1 {
        let need = alpha * mu.powi(k as i32) * inner.diameter() / outer.min_distance().expect("at least two points");
        if theta < need {
            return param(format!("theta = {theta} is below {need}"));
        }
    }
    let n = inner.len();
    Ok(MetricSpace::from_fn(n * k, |u, v| {
        let (i, j) = (u / n, v / n);
        if i == j {
            mu.powi(i as i32 + 1) * inner.dist(u % n, v % n)
        } else {
            theta * outer.dist(i, j)
        }
    }))
}

/// `floor(n / 4m)^2` subsets of `[n]` of size `2m`, any two sharing at most one element.
///
/// Lines `{(t, a t + b mod q) : t < 2m}` over a prime `q`, with `(t, v)` numbered `t q + v`.
/// When no prime fits, tuples are built from a circulant graph on the tuples (each edge is a
/// shared element, the rest are private), then by greedy pair packing.
pub fn gen_ktuple_free_family(n: usize, m: usize) -> Result<Vec<Vec<usize>>> {
    if m == 0 || n < 4 * m {
        return param(format!("need n >= 4m with m >= 1, got n = {n}, m = {m}"));
    }
    let s = n / (4 * m);
    let want = s * s;
    let q = (s.max(2 * m)..).find(|&q| is_prime(q)).expect("primes are unbounded");
    if 2 * m * q <= n {
        let mut out = Vec::with_capacity(want);
        'outer: for a in 0..q {
            for b in 0..q {
                if out.len() == want {
                    break 'outer;
                }
                out.push((0..2 * m).map(|t| t * q + (a * t + b) % q).collect());
            }
        }
        return Ok(out);
    }
    if let Some(f) = circulant_family(n, 2 * m, want) {
        return Ok(f);
    }
    if let Some(f) = greedy_packing(n, 2 * m, want) {
        return Ok(f);
    }
    Err(crate::error::MetriqError::Construction(format!("no tuple family for n = {n}, m = {m}")))
}

/// Tuple `i` holds one element per edge `{i, i +- j}`, `j <= deg/2`, of a circulant graph,
/// plus private elements up to `size`. Two tuples share only the element of their edge.
fn circulant_family(n: usize, size: usize, want: usize) -> Option<Vec<Vec<usize>>> {
    let deg = size.min(want - 1);
    let half = deg / 2;
    let antipodal = !deg.is_multiple_of(2) && want.is_multiple_of(2);
    let edges = want * half + if antipodal { want / 2 } else { 0 };
    if size * want - edges > n {
        return None;
    }
    let mut out: Vec<Vec<usize>> = vec![Vec::with_capacity(size); want];
    let mut next = 0;
    for i in 0..want {
        for j in 1..=half {
            let k = (i + j) % want;
            if want == 2 * j && k < i {
                continue;
            }
            out[i].push(next);
            out[k].push(next);
            next += 1;
        }
        if antipodal && i < want / 2 {
            out[i].push(next);
            out[i + want / 2].push(next);
            next += 1;
        }
    }
    for t in &mut out {
        while t.len() < size {
            t.push(next);
            next += 1;
        }
        t.sort_unstable();
    }
    (next <= n).then_some(out)
}

/// Builds tuples one at a time from the least-used elements, skipping any element that
/// would repeat a pair already covered. Ties are broken by index, then by a fixed-seed
/// shuffle on retries.
fn greedy_packing(n: usize, size: usize, want: usize) -> Option<Vec<Vec<usize>>> {
    (0..PACKING_ATTEMPTS).find_map(|attempt| {
        let mut rank: Vec<usize> = (0..n).collect();
        if attempt > 0 {
            rank.shuffle(&mut Seed::new(attempt as u64).rng());
        }
        pack_once(n, size, want, &rank)
    })
}

const PACKING_ATTEMPTS: usize = 32;

fn pack_once(n: usize, size: usize, want: usize, rank: &[usize]) -> Option<Vec<Vec<usize>>> {
    let mut used = vec![false; n * n];
    let mut load = vec![0usize; n];
    let mut out = Vec::with_capacity(want);
    for _ in 0..want {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&x| (load[x], rank[x]));
        let mut t: Vec<usize> = Vec::with_capacity(size);
        for x in order {
            if t.len() == size {
                break;
            }
            if t.iter().all(|&y| !used[x * n + y]) {
                t.push(x);
            }
        }
        if t.len() < size {
            return None;
        }
        for &x in &t {
            load[x] += 1;
            for &y in &t {
                used[x * n + y] = true;
            }
        }
        t.sort_unstable();
        out.push(t);
    }
    Some(out)
}

fn is_prime(q: usize) -> bool {
    q >= 2 && (2..).take_while(|p| p * p <= q).all(|p| !q.is_multiple_of(p))
}

/// Indices `x_1..x_m, y_1..y_m` with `d(x_i, y_j) = 1` and all other distances 2, if any.
pub fn find_biclique(m: &impl FiniteMetric, size: usize) -> Option<Vec<usize>> {
    fn extend(g: &impl FiniteMetric, size: usize, xs: &mut Vec<usize>, ys: &mut Vec<usize>, next: usize) -> bool {
        if xs.len() == size && ys.len() == size {
            return true;
        }
        let n = g.len();
        for v in next..n {
            if xs.contains(&v) || ys.contains(&v) {
                continue;
            }
            let fits_x = xs.len() < size && xs.iter().all(|&x| g.dist(x, v) == 2.0) && ys.iter().all(|&y| g.dist(y, v) == 1.0);
            if fits_x {
                xs.push(v);
                if extend(g, size, xs, ys, v + 1) {
                    return true;
                }
                xs.pop();
            }
            let fits_y = ys.len() < size && !xs.is_empty() && ys.iter().all(|&y| g.dist(y, v) == 2.0) && xs.iter().all(|&x| g.dist(x, v) == 1.0);
            if fits_y {
                ys.push(v);
                if extend(g, size, xs, ys, next) {
                    return true;
                }
                ys.pop();
            }
        }
        false
    }
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    extend(m, size, &mut xs, &mut ys, 0).then(|| xs.into_iter().chain(ys).collect())
}

/// Fraction of `samples` random partitions into `blocks` parts whose quotient contains `K_{size,size}`.
///
/// Statistical evidence only: it does not cover every partition.
pub fn sampled_biclique_rate(m: &MetricSpace, blocks: usize, size: usize, samples: usize, seed: Seed) -> Result<f64> {
    if blocks == 0 || blocks > m.len() {
        return param(format!("cannot split {} points into {blocks} parts", m.len()));
    }
    let mut hits = 0;
    for s in 0..samples {
        let mut rng = seed.child(s as u64).rng();
        let mut order: Vec<usize> = (0..m.len()).collect();
        order.shuffle(&mut rng);
        let mut parts: Vec<Vec<usize>> = order[..blocks].iter().map(|&x| vec![x]).collect();
        for &x in &order[blocks..] {
            parts[rng.random_range(0..blocks)].push(x);
        }
        let q = crate::quotient::quotient_metric(m, parts)?;
        if find_biclique(&q, size).is_some() {
            hits += 1;
        }
    }
    Ok(if samples == 0 { 0.0 } else { hits as f64 / samples as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::validate_metric;

    #[test]
    fn padded_single_copy_is_identity() {
        let x = random_metric(4, Seed::new(2));
        assert_eq!(gen_padded_copies(&x, 1, None).unwrap(), x);
        assert!(gen_padded_copies(&x, 2, Some(0.1)).is_err());
    }

    #[test]
    fn padded_two_points() {
        let x = MetricSpace::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let y = gen_padded_copies(&x, 2, Some(1.0)).unwrap();
        assert_eq!(y.len(), 4);
        assert!(validate_metric(&y).is_valid());
    }

    #[test]
    fn graph_limits() {
        let full = gen_random_graph_metric(6, 1.0, Seed::new(0)).unwrap();
        let empty = gen_random_graph_metric(6, 0.0, Seed::new(0)).unwrap();
        assert_eq!(full.edges.len(), 15);
        assert!(empty.edges.is_empty());
        assert_eq!(full.metric.dist(0, 5), 1.0);
        assert_eq!(empty.metric.dist(0, 5), 2.0);
    }

    #[test]
    fn composition_of_points_scales_outer() {
        let outer = random_metric(3, Seed::new(4));
        let pt = MetricSpace::from_rows(vec![vec![0.0]]).unwrap();
        let tree = CompositionTree { outer: outer.clone(), beta: 2.0, children: vec![CompositionChild::Space(pt); 3] };
        let (m, g) = gen_composition(&tree).unwrap();
        assert_eq!(g, vec![1.0]);
        assert_eq!(m, outer.scaled(2.0));
    }

    #[test]
    fn equilateral_of_equilateral() {
        let eq = |n, e| realize_special(&SpecialMetric::Equilateral { n, edge: e }).unwrap();
        let tree = CompositionTree { outer: eq(2, 1.0), beta: 3.0, children: vec![CompositionChild::Space(eq(2, 1.0)); 2] };
        let (m, g) = gen_composition(&tree).unwrap();
        assert_eq!(g, vec![1.0]);
        assert_eq!(m.dist(0, 1), 1.0);
        assert_eq!(m.dist(0, 2), 3.0);
        assert_eq!(m.dist(1, 3), 3.0);
    }

    #[test]
    fn lipcomp_two_by_two() {
        let two = MetricSpace::from_rows(vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let z = gen_lipcomp_product(&two, &two, 2.0, 10.0, 1.0).unwrap();
        assert_eq!(z.dist(0, 1), 2.0);
        assert_eq!(z.dist(2, 3), 4.0);
        assert_eq!(z.dist(0, 3), 10.0);
        assert!(validate_metric(&z).is_valid());
        assert!(gen_lipcomp_product(&two, &two, 2.0, 3.0, 1.0).is_err());
        let one = MetricSpace::from_rows(vec![vec![0.0]]).unwrap();
        assert_eq!(gen_lipcomp_product(&one, &two, 3.0, 0.0, 1.0).unwrap(), two.scaled(3.0));
    }

    #[test]
    fn tuple_families() {
        let f = gen_ktuple_free_family(8, 1).unwrap();
        assert_eq!(f.len(), 4);
        for n in [12, 20, 40, 75] {
            for m in 1..=3 {
                if n < 4 * m {
                    continue;
                }
                let f = gen_ktuple_free_family(n, m).unwrap();
                assert_eq!(f.len(), (n / (4 * m)).pow(2));
                for (i, a) in f.iter().enumerate() {
                    assert_eq!(a.len(), 2 * m);
                    assert!(a.iter().all(|&x| x < n));
                    for b in &f[i + 1..] {
                        assert!(a.iter().filter(|x| b.contains(x)).count() <= 1);
                    }
                }
            }
        }
        assert_eq!(gen_ktuple_free_family(12, 3).unwrap().len(), 1);
        assert!(gen_ktuple_free_family(7, 2).is_err());
    }

    #[test]
    fn biclique_in_four_cycle() {
        let c4 = MetricSpace::from_fn(4, |i, j| {
            if i == j {
                0.0
            } else if (i + j) % 2 == 1 {
                1.0
            } else {
                2.0
            }
        });
        assert_eq!(find_biclique(&c4, 2).map(|v| v.len()), Some(4));
        let g = gen_random_graph_metric(30, 0.5, Seed::new(3)).unwrap();
        let rate = sampled_biclique_rate(&g.metric, 25, 2, 5, Seed::new(1)).unwrap();
        assert!((0.0..=1.0).contains(&rate));
    }

    #[test]
    fn random_trees_validate() {
        for s in 0..10 {
            let t = random_composition_tree(3, 3, 2.0, Seed::new(s)).unwrap();
            assert!(validate_metric(&gen_composition(&t).unwrap().0).is_valid());
        }
    }
}
