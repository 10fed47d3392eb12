//! Finite metric spaces on index sets `0..n`.

use crate::error::{param, structural, MetriqError, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

/// Additive tolerance used by every metric-axiom and certificate check.
pub const TOL: f64 = 1e-9;

/// Anything that can report pairwise distances on `0..len()`.
pub trait FiniteMetric: Sync {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Dense symmetric distance matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct MetricSpace {
    n: usize,
    d: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl FiniteMetric for MetricSpace {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.d[i * self.n + j]
    }
}

/// Metric given by a closure; used for closed-form quotients that are too large to store.
pub struct FnMetric<F: Fn(usize, usize) -> f64 + Sync> {
    pub n: usize,
    pub f: F,
}

impl<F: Fn(usize, usize) -> f64 + Sync> FiniteMetric for FnMetric<F> {
    fn len(&self) -> usize {
        self.n
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        (self.f)(i, j)
    }
}

impl Serialize for MetricSpace {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MetricDoc { n: self.n, labels: self.labels.clone(), dist: self.rows() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MetricSpace {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MetricDoc::deserialize(d)?;
        MetricSpace::from_doc(doc).map_err(serde::de::Error::custom)
    }
}

#[derive(Serialize, Deserialize)]
struct MetricDoc {
    n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    dist: Vec<Vec<f64>>,
}

impl MetricSpace {
    /// Builds a matrix without checking metric axioms; only the shape is checked.
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut d = Vec::with_capacity(n * n);
        for (i, r) in rows.into_iter().enumerate() {
            if r.len() != n {
                return structural(format!("row {i} has {} entries, expected {n}", r.len()));
            }
            d.extend(r);
        }
        Ok(MetricSpace { n, d, labels: None })
    }

    pub fn from_flat(n: usize, d: Vec<f64>) -> Result<Self> {
        if d.len() != n * n {
            return structural(format!("flat matrix has {} entries, expected {}", d.len(), n * n));
        }
        Ok(MetricSpace { n, d, labels: None })
    }

    /// Builds a symmetric matrix from `f(i, j)` evaluated on `i < j`.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut d = vec![0.0; n * n];
        for i in 0..n {
            for j in i + 1..n {
                let v = f(i, j);
                d[i * n + j] = v;
                d[j * n + i] = v;
            }
        }
        MetricSpace { n, d, labels: None }
    }

    /// Materializes any [`FiniteMetric`].
    pub fn from_metric(m: &impl FiniteMetric) -> Self {
        Self::from_fn(m.len(), |i, j| m.dist(i, j))
    }

    /// Builds a matrix and rejects it unless every metric axiom holds.
    pub fn checked(rows: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self::from_rows(rows)?;
        let rep = validate_metric(&m);
        if !rep.is_valid() {
            return Err(MetriqError::NotMetric(rep.summary()));
        }
        Ok(m)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return structural(format!("{} labels for {} points", labels.len(), self.n));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.d
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.d.chunks(self.n.max(1)).take(self.n).map(|r| r.to_vec()).collect()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.d[i * self.n..(i + 1) * self.n]
    }

    pub fn scaled(&self, c: f64) -> Self {
        MetricSpace { n: self.n, d: self.d.iter().map(|v| v * c).collect(), labels: self.labels.clone() }
    }

    /// Induced subspace on `idx`, in the given order.
    pub fn subspace(&self, idx: &[usize]) -> Result<Self> {
        if let Some(&bad) = idx.iter().find(|&&i| i >= self.n) {
            return structural(format!("index {bad} out of range for {} points", self.n));
        }
        let k = idx.len();
        let mut d = Vec::with_capacity(k * k);
        for &i in idx {
            for &j in idx {
                d.push(self.dist(i, j));
            }
        }
        let labels = self.labels.as_ref().map(|l| idx.iter().map(|&i| l[i].clone()).collect());
        Ok(MetricSpace { n: k, d, labels })
    }

    pub fn diameter(&self) -> f64 {
        self.d.iter().copied().fold(0.0, f64::max)
    }

    /// Smallest distance between distinct points; `None` for fewer than two points.
    pub fn min_distance(&self) -> Option<f64> {
        let mut best: Option<f64> = None;
        for i in 0..self.n {
            for j in i + 1..self.n {
                let v = self.dist(i, j);
                best = Some(best.map_or(v, |b| b.min(v)));
            }
        }
        best
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.to_value())?)
    }

    pub fn to_value(&self) -> serde_json::Value {
        serde_json::to_value(MetricDoc { n: self.n, labels: self.labels.clone(), dist: self.rows() }).expect("metric document serializes")
    }

    pub fn from_value(v: serde_json::Value) -> Result<Self> {
        let doc: MetricDoc = serde_json::from_value(v)?;
        Self::from_doc(doc)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let doc: MetricDoc = serde_json::from_str(s)?;
        Self::from_doc(doc)
    }

    fn from_doc(doc: MetricDoc) -> Result<Self> {
        if doc.dist.len() != doc.n {
            return structural(format!("n = {} but dist has {} rows", doc.n, doc.dist.len()));
        }
        let m = Self::from_rows(doc.dist)?;
        match doc.labels {
            Some(l) => m.with_labels(l),
            None => Ok(m),
        }
    }

    /// Parses `n` lines of `n` comma-separated floats.
    pub fn from_csv(s: &str) -> Result<Self> {
        let mut rows = Vec::new();
        for (ln, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let row: std::result::Result<Vec<f64>, _> = line.split(',').map(|t| t.trim().parse::<f64>()).collect();
            rows.push(row.map_err(|e| MetriqError::Structural(format!("line {}: {e}", ln + 1)))?);
        }
        Self::from_rows(rows)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for i in 0..self.n {
            let row: Vec<String> = self.row(i).iter().map(|v| format!("{v}")).collect();
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Reads JSON or CSV, chosen by file extension.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        if path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv")) {
            Self::from_csv(&text)
        } else {
            Self::from_json(&text)
        }
    }
}

/// One failed metric axiom.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    NonFinite {
        i: usize,
        j: usize,
    },
    NonzeroDiagonal {
        i: usize,
        value: f64,
    },
    Asymmetric {
        i: usize,
        j: usize,
    },
    NonPositive {
        i: usize,
        j: usize,
        value: f64,
    },
    /// `d(i, k) > d(i, via) + d(via, k)` with `i < k`.
    Triangle {
        i: usize,
        via: usize,
        k: usize,
        excess: f64,
    },
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn summary(&self) -> String {
        match self.violations.first() {
            None => "valid".into(),
            Some(v) => format!("{} violation(s), first: {v:?}", self.violations.len()),
        }
    }
}

/// Checks every metric axiom at tolerance [`TOL`] and lists each failure with its indices.
pub fn validate_metric(m: &MetricSpace) -> ValidationReport {
    let n = m.len();
    let mut v = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if !m.dist(i, j).is_finite() {
                v.push(Violation::NonFinite { i, j });
            }
        }
    }
    if !v.is_empty() {
        return ValidationReport { violations: v };
    }
    for i in 0..n {
        let x = m.dist(i, i);
        if x.abs() > TOL {
            v.push(Violation::NonzeroDiagonal { i, value: x });
        }
        for j in i + 1..n {
            let (a, b) = (m.dist(i, j), m.dist(j, i));
            if (a - b).abs() > TOL {
                v.push(Violation::Asymmetric { i, j });
            }
            if a <= TOL || b <= TOL {
                v.push(Violation::NonPositive { i, j, value: a.min(b) });
            }
        }
    }
    for i in 0..n {
        for k in i + 1..n {
            let dik = m.dist(i, k);
            for via in 0..n {
                if via == i || via == k {
                    continue;
                }
                let excess = dik - m.dist(i, via) - m.dist(via, k);
                if excess > TOL {
                    v.push(Violation::Triangle { i, via, k, excess });
                }
            }
        }
    }
    ValidationReport { violations: v }
}

/// Ratio of largest to smallest nonzero distance.
pub fn aspect_ratio(m: &MetricSpace) -> Result<f64> {
    match m.min_distance() {
        Some(lo) => Ok(m.diameter() / lo),
        None => param("aspect ratio needs at least two points"),
    }
}

/// Distance from `x` to its nearest other point.
pub fn nearest_radius(m: &impl FiniteMetric, x: usize) -> f64 {
    (0..m.len()).filter(|&y| y != x).map(|y| m.dist(x, y)).fold(f64::INFINITY, f64::min)
}

pub fn nearest_radii(m: &impl FiniteMetric) -> Vec<f64> {
    (0..m.len()).map(|x| nearest_radius(m, x)).collect()
}

/// Points whose nearest radius lies in the half-open band `[a, b)`.
pub fn band(m: &impl FiniteMetric, a: f64, b: f64) -> Result<Vec<usize>> {
    if !(a > 0.0 && a < b) {
        return param(format!("band needs 0 < a < b, got [{a}, {b})"));
    }
    Ok((0..m.len())
        .filter(|&x| {
            let r = nearest_radius(m, x);
            r >= a && r < b
        })
        .collect())
}

pub fn set_distance(m: &impl FiniteMetric, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return param("set distance of an empty set");
    }
    let mut best = f64::INFINITY;
    for &x in a {
        for &y in b {
            best = best.min(m.dist(x, y));
        }
    }
    Ok(best)
}

/// Distance from point `x` to the set `a`.
pub fn point_set_distance(m: &impl FiniteMetric, x: usize, a: &[usize]) -> f64 {
    a.iter().map(|&y| m.dist(x, y)).fold(f64::INFINITY, f64::min)
}

pub fn hausdorff(m: &impl FiniteMetric, a: &[usize], b: &[usize]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return param("Hausdorff distance of an empty set");
    }
    let one = |s: &[usize], t: &[usize]| s.iter().map(|&x| point_set_distance(m, x, t)).fold(0.0, f64::max);
    Ok(one(a, b).max(one(b, a)))
}

/// Closes a weighted graph (`f64::INFINITY` for a missing edge) under shortest paths.
pub fn shortest_path_closure(n: usize, w: &mut [f64]) {
    for k in 0..n {
        for i in 0..n {
            let dik = w[i * n + k];
            if !dik.is_finite() {
                continue;
            }
            for j in 0..n {
                let c = dik + w[k * n + j];
                if c < w[i * n + j] {
                    w[i * n + j] = c;
                }
            }
        }
    }
}

/// Parametrized families used as comparison targets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum SpecialMetric {
    /// Root `0` at distance 1 from each of `n` leaves; leaves pairwise at `tau`.
    Star { n: usize, tau: f64 },
    /// `a.len() + 1` points with `d(i, j) = a[min(i, j)]`; each term at most `1/k` of the previous.
    Lacunary { a: Vec<f64>, k: f64 },
    /// `n` points pairwise at `edge`.
    Equilateral { n: usize, edge: f64 },
}

pub fn realize_special(s: &SpecialMetric) -> Result<MetricSpace> {
    match s {
        SpecialMetric::Star { n, tau } => {
            if !(*tau > 0.0 && *tau <= 2.0 + TOL) {
                return param(format!("star needs 0 < tau <= 2, got {tau}"));
            }
            Ok(MetricSpace::from_fn(n + 1, |i, j| if i == 0 || j == 0 { 1.0 } else { *tau }))
        }
        SpecialMetric::Lacunary { a, k } => {
            if *k < 1.0 {
                return param(format!("lacunarity k must be >= 1, got {k}"));
            }
            if let Some(i) = a.iter().position(|&x| !(x > 0.0)) {
                return param(format!("lacunary term a[{i}] must be positive"));
            }
            for i in 1..a.len() {
                if a[i] > a[i - 1] / k + TOL {
                    return param(format!("a[{i}] = {} exceeds a[{}]/k = {}", a[i], i - 1, a[i - 1] / k));
                }
            }
            Ok(MetricSpace::from_fn(a.len() + 1, |i, j| a[i.min(j)]))
        }
        SpecialMetric::Equilateral { n, edge } => {
            if !(*edge > 0.0) {
                return param("equilateral edge must be positive");
            }
            Ok(MetricSpace::from_fn(*n, |_, _| *edge))
        }
    }
}

/// Checks a weight vector: one nonnegative finite entry per point.
pub fn check_weights(n: usize, w: &[f64]) -> Result<()> {
    if w.len() != n {
        return structural(format!("{} weights for {n} points", w.len()));
    }
    if let Some(i) = w.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
        return param(format!("weight {i} is negative or not finite"));
    }
    Ok(())
}
