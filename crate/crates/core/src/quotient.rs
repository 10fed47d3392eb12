//! Quotients of a finite metric by a partition of (part of) its points.
//!
//! The quotient distance between blocks is the shortest-path closure of set distances.
//! Blocks covering every point give a plain quotient (`Q`); blocks covering a proper
//! subset give a quotient of a subspace (`QS`); restricting a quotient to some of its
//! blocks gives `SQ`.

use crate::error::{param, structural, MetriqError, Result};
use crate::metric::{point_set_distance, shortest_path_closure, FiniteMetric, MetricSpace, TOL};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Provenance {
    Q,
    QS,
    SQ,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientSpace {
    pub base: MetricSpace,
    pub blocks: Vec<Vec<usize>>,
    pub provenance: Provenance,
    pub metric: MetricSpace,
}

impl FiniteMetric for QuotientSpace {
    fn len(&self) -> usize {
        self.blocks.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.dist(i, j)
    }
}

#[derive(Serialize, Deserialize)]
struct QuotientDoc {
    base: serde_json::Value,
    blocks: Vec<Vec<usize>>,
    provenance: Provenance,
    dist: Vec<Vec<f64>>,
}

impl QuotientSpace {
    /// Block index containing each base point, `None` for points outside every block.
    pub fn assignment(&self) -> Vec<Option<usize>> {
        let mut a = vec![None; self.base.len()];
        for (b, blk) in self.blocks.iter().enumerate() {
            for &x in blk {
                a[x] = Some(b);
            }
        }
        a
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(QuotientDoc { base: self.base.to_value(), blocks: self.blocks.clone(), provenance: self.provenance, dist: self.metric.rows() })
            .expect("quotient document serializes")
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_value())?)
    }

    /// Reads a quotient document as written, without recomputing distances.
    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        let doc: QuotientDoc = serde_json::from_value(v)?;
        let base = MetricSpace::from_value(doc.base)?;
        check_blocks(base.len(), &doc.blocks)?;
        if doc.dist.len() != doc.blocks.len() {
            return structural("quotient dist size differs from block count");
        }
        Ok(QuotientSpace { base, blocks: doc.blocks, provenance: doc.provenance, metric: MetricSpace::from_rows(doc.dist)? })
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_value(serde_json::from_str(s)?)
    }
}

impl Serialize for QuotientSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuotientSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        QuotientSpace::from_value(serde_json::Value::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

/// Blocks must be nonempty, in range and pairwise disjoint. Returns whether they cover every point.
pub fn check_blocks(n: usize, blocks: &[Vec<usize>]) -> Result<bool> {
    let mut seen = vec![false; n];
    let mut count = 0;
    for (b, blk) in blocks.iter().enumerate() {
        if blk.is_empty() {
            return structural(format!("block {b} is empty"));
        }
        for &x in blk {
            if x >= n {
                return structural(format!("block {b} has index {x}, space has {n} points"));
            }
            if seen[x] {
                return structural(format!("point {x} appears in more than one block"));
            }
            seen[x] = true;
            count += 1;
        }
    }
    Ok(count == n)
}

/// Quotient metric for any family of disjoint nonempty blocks.
pub fn quotient_metric(m: &MetricSpace, blocks: Vec<Vec<usize>>) -> Result<QuotientSpace> {
    let covers = check_blocks(m.len(), &blocks)?;
    let k = blocks.len();
    let mut w = vec![0.0; k * k];
    w.par_chunks_mut(k.max(1)).enumerate().for_each(|(i, row)| {
        for j in 0..k {
            if i != j {
                row[j] = blocks[i].iter().map(|&x| point_set_distance(m, x, &blocks[j])).fold(f64::INFINITY, f64::min);
            }
        }
    });
    shortest_path_closure(k, &mut w);
    Ok(QuotientSpace { base: m.clone(), blocks, provenance: if covers { Provenance::Q } else { Provenance::QS }, metric: MetricSpace::from_flat(k, w)? })
}

/// Collapses `a` to one point, kept as the last block; every other point stays a singleton.
///
/// Uses `d(x, y) = min{d(x, y), d(x, A) + d(y, A)}`.
pub fn quotient_by_subset(m: &MetricSpace, a: &[usize]) -> Result<QuotientSpace> {
    let n = m.len();
    if a.is_empty() {
        return param("collapsed subset must be nonempty");
    }
    let mut in_a = vec![false; n];
    for &x in a {
        if x >= n {
            return structural(format!("index {x} out of range"));
        }
        if in_a[x] {
            return structural(format!("index {x} repeated in collapsed subset"));
        }
        in_a[x] = true;
    }
    let rest: Vec<usize> = (0..n).filter(|&x| !in_a[x]).collect();
    let to_a: Vec<f64> = rest.iter().map(|&x| point_set_distance(m, x, a)).collect();
    let k = rest.len() + 1;
    let metric = MetricSpace::from_fn(k, |i, j| if j == k - 1 { to_a[i] } else { m.dist(rest[i], rest[j]).min(to_a[i] + to_a[j]) });
    let mut blocks: Vec<Vec<usize>> = rest.iter().map(|&x| vec![x]).collect();
    let mut ab = a.to_vec();
    ab.sort_unstable();
    blocks.push(ab);
    Ok(QuotientSpace { base: m.clone(), blocks, provenance: Provenance::Q, metric })
}

/// Restricts a quotient to the blocks listed in `keep`, in that order.
pub fn sq_space(q: &QuotientSpace, keep: &[usize]) -> Result<QuotientSpace> {
    let mut seen = vec![false; q.blocks.len()];
    for &b in keep {
        if b >= q.blocks.len() || seen[b] {
            return structural(format!("bad or repeated block index {b}"));
        }
        seen[b] = true;
    }
    Ok(QuotientSpace {
        base: q.base.clone(),
        blocks: keep.iter().map(|&b| q.blocks[b].clone()).collect(),
        provenance: Provenance::SQ,
        metric: q.metric.subspace(keep)?,
    })
}

/// Expansion, contraction and their product for a map between finite metrics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DistortionReport {
    /// Largest `d_target / d_source` over pairs.
    pub expansion: f64,
    /// Largest `d_source / d_target` over pairs.
    pub contraction: f64,
    pub distortion: f64,
    pub expansion_pair: Option<(usize, usize)>,
    pub contraction_pair: Option<(usize, usize)>,
}

impl DistortionReport {
    pub fn non_contracting(&self) -> bool {
        self.contraction <= 1.0 + TOL
    }

    pub fn non_expanding(&self) -> bool {
        self.expansion <= 1.0 + TOL
    }
}

#[derive(Clone, Copy)]
struct Extremes {
    exp: f64,
    exp_pair: Option<(usize, usize)>,
    con: f64,
    con_pair: Option<(usize, usize)>,
}

impl Extremes {
    const EMPTY: Extremes = Extremes { exp: 0.0, exp_pair: None, con: 0.0, con_pair: None };

    // Larger ratio wins; equal ratios keep the lexicographically smaller pair.
    fn merge(a: Extremes, b: Extremes) -> Extremes {
        let pick = |x: (f64, Option<(usize, usize)>), y: (f64, Option<(usize, usize)>)| {
            if y.0 > x.0 || (y.0 == x.0 && y.1.is_some() && (x.1.is_none() || y.1 < x.1)) {
                y
            } else {
                x
            }
        };
        let (exp, exp_pair) = pick((a.exp, a.exp_pair), (b.exp, b.exp_pair));
        let (con, con_pair) = pick((a.con, a.con_pair), (b.con, b.con_pair));
        Extremes { exp, exp_pair, con, con_pair }
    }
}

/// Distortion of `i -> map[i]` from `source` into `target`.
pub fn distortion_between<S: FiniteMetric, T: FiniteMetric>(source: &S, target: &T, map: &[usize]) -> Result<DistortionReport> {
    let n = source.len();
    if map.len() != n {
        return structural(format!("map has {} entries for {n} source points", map.len()));
    }
    if let Some(&bad) = map.iter().find(|&&t| t >= target.len()) {
        return structural(format!("map sends a point to {bad}, target has {} points", target.len()));
    }
    let ex = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut e = Extremes::EMPTY;
            for j in i + 1..n {
                let (s, t) = (source.dist(i, j), target.dist(map[i], map[j]));
                if map[i] == map[j] || t <= 0.0 {
                    return Err(MetriqError::Parameter(format!("map is not injective: points {i} and {j} land together")));
                }
                let here = Extremes { exp: t / s, exp_pair: Some((i, j)), con: s / t, con_pair: Some((i, j)) };
                e = Extremes::merge(e, here);
            }
            Ok(e)
        })
        .try_reduce(|| Extremes::EMPTY, |a, b| Ok(Extremes::merge(a, b)))?;
    Ok(report(ex))
}

/// Distortion of the identity map between two metrics on the same index set.
pub fn distortion_identity<S: FiniteMetric, T: FiniteMetric>(source: &S, target: &T) -> Result<DistortionReport> {
    let map: Vec<usize> = (0..source.len()).collect();
    distortion_between(source, target, &map)
}

fn report(ex: Extremes) -> DistortionReport {
    if ex.exp_pair.is_none() {
        return DistortionReport { expansion: 1.0, contraction: 1.0, distortion: 1.0, expansion_pair: None, contraction_pair: None };
    }
    DistortionReport { expansion: ex.exp, contraction: ex.con, distortion: ex.exp * ex.con, expansion_pair: ex.exp_pair, contraction_pair: ex.con_pair }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::{realize_special, validate_metric, SpecialMetric};

    fn line(n: usize) -> MetricSpace {
        MetricSpace::from_fn(n, |i, j| (i as f64 - j as f64).abs())
    }

    #[test]
    fn path_collapse_shortcuts() {
        let q = quotient_metric(&line(5), vec![vec![0, 4], vec![1], vec![2], vec![3]]).unwrap();
        assert_eq!(q.provenance, Provenance::Q);
        assert_eq!(q.dist(1, 3), 2.0);
        assert_eq!(q.dist(0, 2), 2.0);
        assert!(validate_metric(&q.metric).is_valid());
    }

    #[test]
    fn singletons_reproduce_the_space() {
        let m = line(4);
        let q = quotient_metric(&m, (0..4).map(|i| vec![i]).collect()).unwrap();
        assert_eq!(q.metric, m);
    }

    #[test]
    fn partial_cover_is_qs() {
        let q = quotient_metric(&line(5), vec![vec![0], vec![2, 3]]).unwrap();
        assert_eq!(q.provenance, Provenance::QS);
        assert_eq!(q.dist(0, 1), 2.0);
    }

    #[test]
    fn overlapping_blocks_rejected() {
        assert!(matches!(quotient_metric(&line(3), vec![vec![0, 1], vec![1, 2]]), Err(MetriqError::Structural(_))));
        assert!(quotient_metric(&line(3), vec![vec![]]).is_err());
    }

    #[test]
    fn subset_closed_form_matches_closure() {
        let m = line(6);
        let a = [1, 4];
        let q = quotient_by_subset(&m, &a).unwrap();
        let mut blocks: Vec<Vec<usize>> = [0, 2, 3, 5].iter().map(|&x| vec![x]).collect();
        blocks.push(a.to_vec());
        let g = quotient_metric(&m, blocks).unwrap();
        assert_eq!(q.blocks, g.blocks);
        for i in 0..q.len() {
            for j in 0..q.len() {
                assert!((q.dist(i, j) - g.dist(i, j)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn sq_restricts() {
        let q = quotient_by_subset(&line(4), &[3]).unwrap();
        let s = sq_space(&q, &[2, 0]).unwrap();
        assert_eq!(s.provenance, Provenance::SQ);
        assert_eq!(s.dist(0, 1), 2.0);
        assert!(sq_space(&q, &[0, 0]).is_err());
    }

    #[test]
    fn distortion_of_scaling_and_collisions() {
        let m = line(4);
        let r = distortion_identity(&m, &m.scaled(3.0)).unwrap();
        assert!((r.expansion - 3.0).abs() < 1e-12);
        assert!((r.distortion - 1.0).abs() < 1e-12);
        let eq = realize_special(&SpecialMetric::Equilateral { n: 4, edge: 1.0 }).unwrap();
        let r = distortion_identity(&m, &eq).unwrap();
        assert_eq!(r.distortion, 3.0);
        assert_eq!(r.contraction_pair, Some((0, 3)));
        assert!(distortion_between(&m, &eq, &[0, 1, 1, 2]).is_err());
    }

    #[test]
    fn json_round_trip() {
        let q = quotient_by_subset(&line(4), &[0, 3]).unwrap();
        let back = QuotientSpace::from_json(&q.to_json().unwrap()).unwrap();
        assert_eq!(back, q);
    }
}
