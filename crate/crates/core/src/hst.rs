//! Hierarchically separated trees and ultrametrics.
//!
//! A `k`-HST is a rooted tree whose internal vertices carry positive labels, each child
//! label at most `1/k` of its parent's. Leaves are points; the leaf metric is the label
//! of the lowest common ancestor.

use crate::embed::vector::{EmbedMode, VectorEmbedding};
use crate::error::{param, structural, MetriqError, Result};
use crate::metric::{FiniteMetric, MetricSpace, TOL};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Hst {
    Leaf { leaf: usize },
    Node { delta: f64, children: Vec<Hst> },
}

impl Hst {
    pub fn leaf(id: usize) -> Self {
        Hst::Leaf { leaf: id }
    }

    pub fn node(delta: f64, children: Vec<Hst>) -> Self {
        Hst::Node { delta, children }
    }

    /// Root label; 0 for a single leaf.
    pub fn delta(&self) -> f64 {
        match self {
            Hst::Leaf { .. } => 0.0,
            Hst::Node { delta, .. } => *delta,
        }
    }

    /// Leaf ids in left-to-right order.
    pub fn leaves(&self) -> Vec<usize> {
        let mut out = Vec::new();
        self.collect_leaves(&mut out);
        out
    }

    fn collect_leaves(&self, out: &mut Vec<usize>) {
        match self {
            Hst::Leaf { leaf } => out.push(*leaf),
            Hst::Node { children, .. } => children.iter().for_each(|c| c.collect_leaves(out)),
        }
    }

    pub fn depth(&self) -> usize {
        match self {
            Hst::Leaf { .. } => 0,
            Hst::Node { children, .. } => 1 + children.iter().map(Hst::depth).max().unwrap_or(0),
        }
    }

    /// Multiplies every label by `c`.
    pub fn scaled(&self, c: f64) -> Hst {
        match self {
            Hst::Leaf { leaf } => Hst::leaf(*leaf),
            Hst::Node { delta, children } => Hst::node(delta * c, children.iter().map(|t| t.scaled(c)).collect()),
        }
    }

    /// Replaces every leaf by the subtree `f(id)`.
    pub fn graft(&self, f: &mut impl FnMut(usize) -> Hst) -> Hst {
        match self {
            Hst::Leaf { leaf } => f(*leaf),
            Hst::Node { delta, children } => Hst::node(*delta, children.iter().map(|c| c.graft(f)).collect()),
        }
    }

    /// Builds a tree from a parent array; `leaf_of[v]` names the point at leaf `v`.
    pub fn from_parents(parent: &[Option<usize>], delta: &[f64], leaf_of: &[Option<usize>]) -> Result<Hst> {
        let n = parent.len();
        if delta.len() != n || leaf_of.len() != n {
            return structural("parent, label and leaf arrays differ in length");
        }
        let roots: Vec<usize> = (0..n).filter(|&v| parent[v].is_none()).collect();
        if roots.len() != 1 {
            return structural(format!("expected one root, found {}", roots.len()));
        }
        let mut kids = vec![Vec::new(); n];
        for (v, &up) in parent.iter().enumerate() {
            if let Some(p) = up {
                if p >= n {
                    return structural(format!("vertex {v} has parent {p} out of range"));
                }
                kids[p].push(v);
            }
        }
        let mut seen = vec![false; n];
        fn build(v: usize, kids: &[Vec<usize>], delta: &[f64], leaf_of: &[Option<usize>], seen: &mut [bool]) -> Result<Hst> {
            if seen[v] {
                return structural(format!("vertex {v} reached twice"));
            }
            seen[v] = true;
            if kids[v].is_empty() {
                return match leaf_of[v] {
                    Some(id) => Ok(Hst::leaf(id)),
                    None => structural(format!("childless vertex {v} carries no point")),
                };
            }
            let ch: Result<Vec<Hst>> = kids[v].iter().map(|&c| build(c, kids, delta, leaf_of, seen)).collect();
            Ok(Hst::node(delta[v], ch?))
        }
        let t = build(roots[0], &kids, delta, leaf_of, &mut seen)?;
        if let Some(v) = seen.iter().position(|s| !s) {
            return structural(format!("vertex {v} is not connected to the root"));
        }
        Ok(t)
    }

    /// Leaf ids must be exactly `0..L`. Returns `L`.
    pub fn point_count(&self) -> Result<usize> {
        let leaves = self.leaves();
        let mut seen = vec![false; leaves.len()];
        for &id in &leaves {
            if id >= leaves.len() || seen[id] {
                return structural(format!("leaf ids are not a permutation of 0..{}", leaves.len()));
            }
            seen[id] = true;
        }
        Ok(leaves.len())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HstViolation {
    /// Internal vertex (preorder index) with a nonpositive label.
    NonPositiveLabel { vertex: usize, delta: f64 },
    /// Child label exceeds parent label divided by `k`.
    Ratio { parent: usize, child: usize, parent_delta: f64, child_delta: f64 },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct HstReport {
    pub violations: Vec<HstViolation>,
}

impl HstReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks the `k`-HST label conditions. Structural defects are errors, label defects are reported.
pub fn validate_khst(t: &Hst, k: f64) -> Result<HstReport> {
    if !(k >= 1.0) {
        return param(format!("k must be >= 1, got {k}"));
    }
    t.point_count()?;
    let mut rep = HstReport::default();
    let mut counter = 0usize;
    fn walk(t: &Hst, k: f64, counter: &mut usize, rep: &mut HstReport) -> Result<()> {
        let me = *counter;
        *counter += 1;
        if let Hst::Node { delta, children } = t {
            if children.is_empty() {
                return structural(format!("internal vertex {me} has no children"));
            }
            if !(*delta > 0.0) {
                rep.violations.push(HstViolation::NonPositiveLabel { vertex: me, delta: *delta });
            }
            for c in children {
                let cid = *counter;
                if let Hst::Node { delta: cd, .. } = c {
                    if *cd > delta / k + TOL * delta.abs().max(1.0) {
                        rep.violations.push(HstViolation::Ratio { parent: me, child: cid, parent_delta: *delta, child_delta: *cd });
                    }
                }
                walk(c, k, counter, rep)?;
            }
        }
        Ok(())
    }
    walk(t, k, &mut counter, &mut rep)?;
    Ok(rep)
}

/// Leaf metric of the tree: distance is the label of the lowest common ancestor.
pub fn hst_to_metric(t: &Hst) -> Result<MetricSpace> {
    let n = t.point_count()?;
    let mut d = vec![0.0; n * n];
    fn fill(t: &Hst, n: usize, d: &mut [f64]) -> Vec<usize> {
        match t {
            Hst::Leaf { leaf } => vec![*leaf],
            Hst::Node { delta, children } => {
                let mut all: Vec<usize> = Vec::new();
                for c in children {
                    let sub = fill(c, n, d);
                    for &x in &all {
                        for &y in &sub {
                            d[x * n + y] = *delta;
                            d[y * n + x] = *delta;
                        }
                    }
                    all.extend(sub);
                }
                all
            }
        }
    }
    fill(t, n, &mut d);
    MetricSpace::from_flat(n, d)
}

/// Checks `d(x, z) <= max(d(x, y), d(y, z))` at tolerance.
pub fn is_ultrametric(m: &impl FiniteMetric) -> bool {
    let n = m.len();
    (0..n).all(|x| (0..n).all(|y| (0..n).all(|z| m.dist(x, z) <= m.dist(x, y).max(m.dist(y, z)) + TOL)))
}

/// Largest ultrametric below `m`: the minimax path distance (single linkage).
pub fn subdominant_ultrametric(m: &impl FiniteMetric) -> MetricSpace {
    let n = m.len();
    let mut u: Vec<f64> = (0..n * n).map(|k| m.dist(k / n, k % n)).collect();
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let c = u[i * n + k].max(u[k * n + j]);
                if c < u[i * n + j] {
                    u[i * n + j] = c;
                }
            }
        }
    }
    MetricSpace::from_flat(n, u).expect("square by construction")
}

/// Canonical tree of an ultrametric: at each level, points closer than the diameter are merged.
pub fn ultrametric_to_hst(m: &MetricSpace) -> Result<Hst> {
    if !is_ultrametric(m) {
        return Err(MetriqError::NotMetric("matrix is not an ultrametric".into()));
    }
    if m.is_empty() {
        return param("empty space has no tree");
    }
    fn split(m: &MetricSpace, pts: &[usize]) -> Hst {
        if pts.len() == 1 {
            return Hst::leaf(pts[0]);
        }
        let diam = pts.iter().flat_map(|&x| pts.iter().map(move |&y| m.dist(x, y))).fold(0.0, f64::max);
        // Connected components of the graph with edges shorter than the diameter.
        let mut comp = vec![usize::MAX; pts.len()];
        let mut groups: Vec<Vec<usize>> = Vec::new();
        for s in 0..pts.len() {
            if comp[s] != usize::MAX {
                continue;
            }
            let g = groups.len();
            comp[s] = g;
            let mut stack = vec![s];
            let mut members = Vec::new();
            while let Some(a) = stack.pop() {
                members.push(pts[a]);
                for b in 0..pts.len() {
                    if comp[b] == usize::MAX && m.dist(pts[a], pts[b]) < diam {
                        comp[b] = g;
                        stack.push(b);
                    }
                }
            }
            members.sort_unstable();
            groups.push(members);
        }
        Hst::node(diam, groups.iter().map(|g| split(m, g)).collect())
    }
    let pts: Vec<usize> = (0..m.len()).collect();
    Ok(split(m, &pts))
}

/// Isometric embedding of the leaf metric into Euclidean space, one coordinate per merge.
///
/// Siblings are merged two at a time; each merge places the two groups on a fresh axis so
/// that cross distances equal the parent label and the merged group again lies on a sphere.
pub fn ultrametric_to_l2(t: &Hst) -> Result<VectorEmbedding> {
    let n = t.point_count()?;
    let dim = n.saturating_sub(1);
    let mut v = vec![vec![0.0; dim]; n];
    let mut next = 0usize;
    fn place(t: &Hst, v: &mut [Vec<f64>], next: &mut usize) -> (Vec<usize>, f64) {
        match t {
            Hst::Leaf { leaf } => (vec![*leaf], 0.0),
            Hst::Node { delta, children } => {
                let mut it = children.iter();
                let (mut acc, mut r2) = place(it.next().expect("internal vertex has children"), v, next);
                for c in it {
                    let (sub, s2) = place(c, v, next);
                    let len = (delta * delta - r2 - s2).max(0.0).sqrt();
                    let shift = if len > 0.0 { (s2 - r2) / len } else { 0.0 };
                    let (left, right) = ((len + shift) / 2.0, (len - shift) / 2.0);
                    let k = *next;
                    *next += 1;
                    for &x in &acc {
                        v[x][k] = -left;
                    }
                    for &x in &sub {
                        v[x][k] = right;
                    }
                    r2 += left * left;
                    acc.extend(sub);
                }
                (acc, r2)
            }
        }
    }
    place(t, &mut v, &mut next);
    VectorEmbedding::new(2.0, EmbedMode::Exact, v, None)
}

/// Lower bound on the distortion of embedding the line subset `a` into any ultrametric.
pub fn line_um_lower_bound(a: &[f64]) -> Result<f64> {
    if a.len() < 2 {
        return param("need at least two points");
    }
    if a.windows(2).any(|w| !(w[1] > w[0])) {
        return param("points must be strictly increasing");
    }
    let gap = a.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max);
    Ok((a[a.len() - 1] - a[0]) / gap)
}
