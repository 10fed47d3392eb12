//! Large quotients of subspaces of the Hamming cube `{0,1}^d` with small Euclidean or `L_p`
//! distortion, and lower bounds from singleton sub-balls.
//!
//! Points of the cube are the integers `0..2^d`; the Hamming distance is the popcount of `x ^ y`.

use crate::embed::pstable::uptolog_distance;
use crate::embed::{EmbedMode, VectorEmbedding};
use crate::error::{param, structural, MetriqError, Result};
use crate::metric::{FiniteMetric, FnMetric, MetricSpace};
use crate::quotient::{distortion_identity, quotient_metric, DistortionReport, QuotientSpace};
use serde::{Deserialize, Serialize};
use std::collections::VecDeque;
use std::f64::consts::E;

pub const MAX_DIM: usize = 22;
/// Largest quotient whose distortion is measured by a full pair scan.
pub const PAIR_SCAN_LIMIT: usize = 70_000;
/// Largest dimension for which the Euclidean embedding is materialized as vectors.
pub const MATERIALIZE_DIM: usize = 10;

pub fn hamming(x: u32, y: u32) -> u32 {
    (x ^ y).count_ones()
}

pub fn hamming_cube(d: usize) -> Result<MetricSpace> {
    if d > 12 {
        return param(format!("refusing to store the full distance matrix of a {d}-cube"));
    }
    Ok(MetricSpace::from_fn(1 << d, |i, j| hamming(i as u32, j as u32) as f64))
}

/// Hamming distance from every cube point to the nearest source, `u8::MAX` if none.
pub fn distance_to_set(d: usize, sources: impl IntoIterator<Item = u32>) -> Vec<u8> {
    let mut dist = vec![u8::MAX; 1 << d];
    let mut queue = VecDeque::new();
    for s in sources {
        if dist[s as usize] != 0 {
            dist[s as usize] = 0;
            queue.push_back(s);
        }
    }
    while let Some(x) = queue.pop_front() {
        let next = dist[x as usize] + 1;
        for k in 0..d {
            let y = x ^ (1 << k);
            if dist[y as usize] > next {
                dist[y as usize] = next;
                queue.push_back(y);
            }
        }
    }
    dist
}

/// `r`: the smallest even integer exceeding `2 ceil(ln(1/eps) / ln(d / ln(1/eps)))`.
pub fn net_radius(d: usize, eps: f64) -> Result<usize> {
    let l = (1.0 / eps).ln();
    let ratio = (d as f64 / l).ln();
    if !(ratio > 0.0) {
        return param(format!("ln(d / ln(1/eps)) must be positive; d = {d}, eps = {eps}"));
    }
    let base = 2 * (l / ratio).ceil() as usize;
    Ok(base + 2 - base % 2)
}

/// Greedy net in lexicographic order: a point is kept when it is farther than `sep` from
/// every kept point.
pub fn greedy_net(d: usize, sep: usize) -> Vec<u32> {
    let mut near = vec![u8::MAX; 1 << d];
    let mut centers = Vec::new();
    let mut queue = VecDeque::new();
    for x in 0..(1u32 << d) {
        if (near[x as usize] as usize) <= sep {
            continue;
        }
        centers.push(x);
        near[x as usize] = 0;
        queue.push_back(x);
        while let Some(y) = queue.pop_front() {
            let next = near[y as usize] + 1;
            if next as usize > sep {
                continue;
            }
            for k in 0..d {
                let z = y ^ (1 << k);
                if near[z as usize] > next {
                    near[z as usize] = next;
                    queue.push_back(z);
                }
            }
        }
    }
    centers
}

/// Target space of the distance certificate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CubeTarget {
    /// Gaussian features at level `r`.
    Euclidean,
    /// p-stable features at level `r`, `1 <= p < 2`.
    Stable { p: f64 },
}

/// The quotient of `S` collapsing the net `A` to one point, kept as the last block.
///
/// `S` is the cube minus the punctured balls of radius `r/2` around net points.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CubeQsResult {
    pub d: usize,
    pub eps: f64,
    pub p: f64,
    pub r: usize,
    /// Net points, in the order they were chosen.
    pub centers: Vec<u32>,
    /// Points of `S` outside the net, one singleton block each, in increasing order.
    pub singletons: Vec<u32>,
    /// Distortion of the embedding against the quotient metric.
    pub report: DistortionReport,
    pub bound: f64,
    /// Whether the distortion was measured over every pair or bounded over distance triples.
    pub exhaustive: bool,
    pub size_ok: bool,
    /// Whether `eps >= exp(-d/400)`, the range in which the size bound is guaranteed.
    pub in_guaranteed_range: bool,
    #[serde(skip)]
    pub embedding: Option<VectorEmbedding>,
    #[serde(skip)]
    to_net: Vec<u8>,
}

impl CubeQsResult {
    pub fn block_count(&self) -> usize {
        self.singletons.len() + 1
    }

    pub fn required_blocks(&self) -> usize {
        ((1.0 - self.eps) * (1u64 << self.d) as f64).ceil() as usize
    }

    fn to_net(&self) -> std::borrow::Cow<'_, [u8]> {
        if self.to_net.len() == 1 << self.d {
            std::borrow::Cow::Borrowed(&self.to_net)
        } else {
            std::borrow::Cow::Owned(distance_to_set(self.d, self.centers.iter().copied()))
        }
    }

    /// Rebuilds cached tables after deserialization.
    pub fn restore(&mut self) {
        if self.to_net.len() != 1 << self.d {
            self.to_net = distance_to_set(self.d, self.centers.iter().copied());
        }
    }

    /// Distance to the net for each singleton block.
    pub fn net_distances(&self) -> Vec<u8> {
        let t = self.to_net();
        self.singletons.iter().map(|&x| t[x as usize]).collect()
    }

    /// Quotient distance between blocks `i` and `j`.
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        let t = self.to_net();
        quotient_distance(&self.singletons, &t, i, j)
    }

    /// Materializes the quotient with its full base cube.
    pub fn to_quotient_space(&self) -> Result<QuotientSpace> {
        let cube = hamming_cube(self.d)?;
        let mut blocks: Vec<Vec<usize>> = self.singletons.iter().map(|&x| vec![x as usize]).collect();
        let mut net: Vec<usize> = self.centers.iter().map(|&x| x as usize).collect();
        net.sort_unstable();
        blocks.push(net);
        quotient_metric(&cube, blocks)
    }

    /// Checks `min{H, r} <= d <= min{H, 4r}` on the given singleton pairs; returns the failures.
    pub fn sandwich_violations(&self, pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
        let t = self.to_net();
        let r = self.r as f64;
        pairs
            .iter()
            .copied()
            .filter(|&(i, j)| {
                let h = hamming(self.singletons[i], self.singletons[j]) as f64;
                let q = quotient_distance(&self.singletons, &t, i, j);
                !(h.min(r) <= q && q <= h.min(4.0 * r))
            })
            .collect()
    }
}

fn quotient_distance(singletons: &[u32], to_net: &[u8], i: usize, j: usize) -> f64 {
    let k = singletons.len();
    if i == j {
        return 0.0;
    }
    if i == k || j == k {
        let x = if i == k { j } else { i };
        return to_net[singletons[x] as usize] as f64;
    }
    let (x, y) = (singletons[i], singletons[j]);
    (hamming(x, y) as f64).min(to_net[x as usize] as f64 + to_net[y as usize] as f64)
}

/// Image distances as a function of Hamming distance, plus the image norm.
struct Kernel {
    by_hamming: Vec<f64>,
    norm: f64,
}

fn kernel(d: usize, r: usize, target: CubeTarget) -> Result<Kernel> {
    let rf = r as f64;
    match target {
        CubeTarget::Euclidean => {
            Ok(Kernel { by_hamming: (0..=d).map(|h| (2.0 * rf * -(-(h as f64) / (2.0 * rf)).exp_m1()).sqrt()).collect(), norm: rf.sqrt() })
        }
        CubeTarget::Stable { p } => Ok(Kernel {
            by_hamming: (0..=d).map(|h| if h == 0 { Ok(0.0) } else { uptolog_distance(h as f64, rf, p) }).collect::<Result<_>>()?,
            norm: rf.powf(1.0 / p),
        }),
    }
}

fn distortion_bound(d: usize, r: usize, target: CubeTarget, k: &Kernel) -> f64 {
    let rf = r as f64;
    match target {
        CubeTarget::Euclidean => 8.0 * (E * rf / (E - 1.0)).sqrt(),
        CubeTarget::Stable { p } => {
            let (mut c1, mut c2) = (f64::INFINITY, 0.0f64);
            for h in 1..=d {
                let t = (h as f64).min(rf);
                c1 = c1.min(k.by_hamming[h] * rf.powf(1.0 - 1.0 / p) / t);
                c2 = c2.max(k.by_hamming[h] / (rf.ln().powf(1.0 / p) * t));
            }
            let expansion = (c2 * rf.ln().powf(1.0 / p)).max(2.0 * rf.powf(1.0 / p - 1.0));
            let contraction = (4.0 * rf.powf(1.0 - 1.0 / p) / c1).max(2.0 * rf.powf(1.0 - 1.0 / p));
            expansion * contraction
        }
    }
}

/// Builds the quotient and measures its distortion without checking the size bound.
pub fn cube_qs_build(d: usize, eps: f64, p: f64) -> Result<CubeQsResult> {
    if !(1..=MAX_DIM).contains(&d) {
        return param(format!("dimension must lie in 1..={MAX_DIM}, got {d}"));
    }
    if !(eps >= 0.5f64.powi(d as i32) && eps < 0.25) {
        return param(format!("eps must lie in [2^-d, 1/4), got {eps}"));
    }
    let target = if p == 2.0 {
        CubeTarget::Euclidean
    } else if (1.0..2.0).contains(&p) {
        CubeTarget::Stable { p }
    } else {
        return param(format!("p must be 2 or lie in [1, 2), got {p}"));
    };
    let r = net_radius(d, eps)?;
    let centers = greedy_net(d, 2 * r);
    let to_net = distance_to_set(d, centers.iter().copied());
    let singletons: Vec<u32> = (0..(1u32 << d)).filter(|&x| to_net[x as usize] as usize * 2 > r).collect();
    let k = kernel(d, r, target)?;
    let (report, exhaustive) = if singletons.len() < PAIR_SCAN_LIMIT {
        (measure_pairs(&singletons, &to_net, &k)?, true)
    } else {
        (measure_triples(d, &singletons, &to_net, &k), false)
    };
    let embedding = match target {
        CubeTarget::Euclidean if d <= MATERIALIZE_DIM => Some(tensor_features(d, r, &singletons)?),
        _ => None,
    };
    let mut out = CubeQsResult {
        d,
        eps,
        p,
        r,
        centers,
        singletons,
        report,
        bound: distortion_bound(d, r, target, &k),
        exhaustive,
        size_ok: false,
        in_guaranteed_range: eps >= (-(d as f64) / 400.0).exp(),
        embedding,
        to_net,
    };
    out.size_ok = out.block_count() >= out.required_blocks();
    Ok(out)
}

/// Failure of [`cube_qs_construct`].
#[derive(Debug, thiserror::Error)]
pub enum CubeQsError {
    #[error(transparent)]
    Invalid(#[from] MetriqError),
    /// The quotient has fewer than `(1 - eps) 2^d` blocks; the result is kept for diagnostics.
    #[error("d = {}, eps = {}, r = {}: {} blocks, need {} ({} net points)", .0.d, .0.eps, .0.r, .0.block_count(), .0.required_blocks(), .0.centers.len())]
    Shortfall(Box<CubeQsResult>),
}

impl From<CubeQsError> for MetriqError {
    fn from(e: CubeQsError) -> Self {
        match e {
            CubeQsError::Invalid(e) => e,
            s @ CubeQsError::Shortfall(_) => MetriqError::Construction(s.to_string()),
        }
    }
}

/// Builds the quotient and requires at least `(1 - eps) 2^d` blocks.
pub fn cube_qs_construct(d: usize, eps: f64, p: f64) -> std::result::Result<CubeQsResult, CubeQsError> {
    let out = cube_qs_build(d, eps, p)?;
    if out.size_ok {
        Ok(out)
    } else {
        Err(CubeQsError::Shortfall(Box::new(out)))
    }
}

fn measure_pairs(singletons: &[u32], to_net: &[u8], k: &Kernel) -> Result<DistortionReport> {
    let n = singletons.len() + 1;
    let source = FnMetric { n, f: |i, j| quotient_distance(singletons, to_net, i, j) };
    let image = FnMetric {
        n,
        f: |i: usize, j: usize| {
            if i == j {
                0.0
            } else if i == n - 1 || j == n - 1 {
                k.norm
            } else {
                k.by_hamming[hamming(singletons[i], singletons[j]) as usize]
            }
        },
    };
    distortion_identity(&source, &image)
}

/// Bounds expansion and contraction over every (Hamming distance, net distance, net distance)
/// triple consistent with the realized net distances; a superset of the realized pairs.
fn measure_triples(d: usize, singletons: &[u32], to_net: &[u8], k: &Kernel) -> DistortionReport {
    let mut seen = vec![false; d + 1];
    for &x in singletons {
        seen[to_net[x as usize] as usize] = true;
    }
    let levels: Vec<usize> = (0..=d).filter(|&a| seen[a]).collect();
    let (mut exp, mut con) = (0.0f64, 0.0f64);
    for &a in &levels {
        let q = a as f64;
        exp = exp.max(k.norm / q);
        con = con.max(q / k.norm);
        for &b in &levels {
            for h in a.abs_diff(b).max(1)..=d {
                let q = (h as f64).min((a + b) as f64);
                exp = exp.max(k.by_hamming[h] / q);
                con = con.max(q / k.by_hamming[h]);
            }
        }
    }
    DistortionReport { expansion: exp, contraction: con, distortion: exp * con, expansion_pair: None, contraction_pair: None }
}

/// Exact feature map with `<phi(x), phi(y)> = r exp(-H(x, y) / (2r))`; the net block maps to 0.
fn tensor_features(d: usize, r: usize, singletons: &[u32]) -> Result<VectorEmbedding> {
    let c = (-1.0 / (2.0 * r as f64)).exp();
    let (a, b) = (((1.0 + c) / 2.0).sqrt(), ((1.0 - c) / 2.0).sqrt());
    let scale = (r as f64).sqrt();
    let mut vectors: Vec<Vec<f64>> = singletons
        .iter()
        .map(|&x| {
            (0..1u32 << d)
                .map(|t| {
                    let mut v = scale;
                    for k in 0..d {
                        v *= if t >> k & 1 == 0 {
                            a
                        } else if x >> k & 1 == 0 {
                            b
                        } else {
                            -b
                        };
                    }
                    v
                })
                .collect()
        })
        .collect();
    vectors.push(vec![0.0; 1 << d]);
    VectorEmbedding::new(2.0, EmbedMode::Exact, vectors, None)
}

/// A ball of the cube all of whose points are singleton blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubeLowerCertificate {
    pub center: u32,
    pub radius: usize,
    /// `floor(radius / 3)`: the dimension of the sub-cube the ball contains at scale 1.
    pub m: usize,
    /// `m^(1 - 1/p)`, or 0 when `m = 0`.
    pub bound: f64,
}

/// Lower bound from the largest ball of singleton blocks, given the block of each cube point.
pub fn certify_lower_assignment(d: usize, assignment: &[Option<usize>], p: f64) -> Result<CubeLowerCertificate> {
    if assignment.len() != 1 << d {
        return structural(format!("{} points is not a {d}-cube", assignment.len()));
    }
    if !(1.0..=2.0).contains(&p) {
        return param(format!("p must lie in [1, 2], got {p}"));
    }
    let mut sizes = std::collections::HashMap::new();
    for b in assignment.iter().flatten() {
        *sizes.entry(*b).or_insert(0usize) += 1;
    }
    let bad = (0..1u32 << d).filter(|&x| assignment[x as usize].is_none_or(|b| sizes[&b] > 1));
    let to_bad = distance_to_set(d, bad);
    let (mut center, mut radius) = (0u32, 0usize);
    for x in 0..1u32 << d {
        let rad = match to_bad[x as usize] {
            u8::MAX => d,
            0 => continue,
            t => (t as usize - 1).min(d),
        };
        if rad > radius {
            (center, radius) = (x, rad);
        }
    }
    let m = radius / 3;
    let bound = if m == 0 { 0.0 } else { (m as f64).powf(1.0 - 1.0 / p) };
    Ok(CubeLowerCertificate { center, radius, m, bound })
}

/// [`certify_lower_assignment`] for a quotient whose base must be the Hamming cube.
pub fn cube_qs_certify_lower(q: &QuotientSpace, p: f64) -> Result<CubeLowerCertificate> {
    let n = q.base.len();
    if !n.is_power_of_two() {
        return structural(format!("base has {n} points, not a power of two"));
    }
    let d = n.trailing_zeros() as usize;
    for i in 0..n {
        for j in i + 1..n {
            if q.base.dist(i, j) != hamming(i as u32, j as u32) as f64 {
                return structural(format!("base distance between {i} and {j} is not the Hamming distance"));
            }
        }
    }
    certify_lower_assignment(d, &q.assignment(), p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::quotient_metric;

    #[test]
    fn radius_formula() {
        // ln(5) / ln(10 / ln 5) = 0.88, so 2 * 1 = 2 and the next even number is 4.
        assert_eq!(net_radius(10, 0.2).unwrap(), 4);
        assert!(net_radius(1, 0.2).is_err());
    }

    #[test]
    fn net_is_separated_and_maximal() {
        let (d, sep) = (8, 4);
        let net = greedy_net(d, sep);
        for (i, &a) in net.iter().enumerate() {
            for &b in &net[i + 1..] {
                assert!(hamming(a, b) as usize > sep);
            }
        }
        let t = distance_to_set(d, net.iter().copied());
        assert!(t.iter().all(|&x| (x as usize) <= sep));
    }

    #[test]
    fn closed_form_matches_quotient_metric() {
        let out = cube_qs_build(8, 0.2, 2.0).unwrap();
        let q = out.to_quotient_space().unwrap();
        for i in 0..out.block_count() {
            for j in 0..out.block_count() {
                assert_eq!(q.metric.dist(i, j), out.distance(i, j), "blocks {i} {j}");
            }
        }
    }

    #[test]
    fn materialized_embedding_matches_kernel() {
        let out = cube_qs_build(6, 0.2, 2.0).unwrap();
        let e = out.embedding.as_ref().unwrap();
        let k = kernel(6, out.r, CubeTarget::Euclidean).unwrap();
        let n = out.block_count();
        assert!(e.norm(n - 1) == 0.0);
        for i in 0..n - 1 {
            assert!((e.norm(i) - (out.r as f64).sqrt()).abs() < 1e-9);
            for j in 0..i {
                let h = hamming(out.singletons[i], out.singletons[j]) as usize;
                assert!((e.dist(i, j) - k.by_hamming[h]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn triple_bound_dominates_pair_scan() {
        let out = cube_qs_build(9, 0.2, 2.0).unwrap();
        let k = kernel(9, out.r, CubeTarget::Euclidean).unwrap();
        let t = measure_triples(9, &out.singletons, &out.net_distances_full(), &k);
        assert!(t.expansion >= out.report.expansion - 1e-12);
        assert!(t.contraction >= out.report.contraction - 1e-12);
    }

    #[test]
    fn stable_route_reports_within_envelope() {
        let out = cube_qs_build(8, 0.2, 1.5).unwrap();
        assert!(out.report.distortion <= out.bound);
        assert!(out.embedding.is_none());
    }

    #[test]
    fn identity_quotient_of_nine_cube() {
        let assignment: Vec<Option<usize>> = (0..512).map(Some).collect();
        let c = certify_lower_assignment(9, &assignment, 2.0).unwrap();
        assert_eq!((c.radius, c.m), (9, 3));
        assert!((c.bound - 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hemisphere_block_is_avoided() {
        let d = 6;
        let cube = hamming_cube(d).unwrap();
        let half: Vec<usize> = (0..64).filter(|x| x & 1 == 1).collect();
        let mut blocks: Vec<Vec<usize>> = (0..64).filter(|x| x & 1 == 0).map(|x| vec![x]).collect();
        blocks.push(half);
        let q = quotient_metric(&cube, blocks).unwrap();
        let c = cube_qs_certify_lower(&q, 1.0).unwrap();
        assert_eq!(c.radius, 0);
        assert_eq!(c.bound, 0.0);
    }

    #[test]
    fn rejects_non_cube_base() {
        let m = MetricSpace::from_fn(4, |i, j| if i == j { 0.0 } else { 1.0 });
        let q = quotient_metric(&m, (0..4).map(|x| vec![x]).collect()).unwrap();
        assert!(cube_qs_certify_lower(&q, 2.0).is_err());
    }

    impl CubeQsResult {
        fn net_distances_full(&self) -> Vec<u8> {
            self.to_net().into_owned()
        }
    }
}
