//! Lipschitz quotient maps between finite metrics.
//!
//! For a surjection `f`, the Lipschitz constant is the largest ratio of a target distance to
//! the set distance between the two preimages, and the co-Lipschitz constant is the largest
//! ratio of the Hausdorff distance between preimages to the target distance.

use crate::error::{structural, Result};
use crate::metric::{hausdorff, set_distance, FiniteMetric, MetricSpace, TOL};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq)]
pub struct QuotientMap {
    pub source: MetricSpace,
    pub target: MetricSpace,
    pub assign: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct MapDoc {
    source: serde_json::Value,
    target: serde_json::Value,
    assign: Vec<usize>,
}

impl QuotientMap {
    /// Checks that `assign` is a total surjection onto the target.
    pub fn new(source: MetricSpace, target: MetricSpace, assign: Vec<usize>) -> Result<Self> {
        if assign.len() != source.len() {
            return structural(format!("{} assignments for {} source points", assign.len(), source.len()));
        }
        let mut hit = vec![false; target.len()];
        for &y in &assign {
            if y >= target.len() {
                return structural(format!("assignment {y} out of range"));
            }
            hit[y] = true;
        }
        if let Some(y) = hit.iter().position(|h| !h) {
            return structural(format!("target point {y} has empty preimage"));
        }
        Ok(QuotientMap { source, target, assign })
    }

    pub fn preimages(&self) -> Vec<Vec<usize>> {
        let mut pre = vec![Vec::new(); self.target.len()];
        for (x, &y) in self.assign.iter().enumerate() {
            pre[y].push(x);
        }
        pre
    }

    fn doc(&self) -> MapDoc {
        MapDoc { source: self.source.to_value(), target: self.target.to_value(), assign: self.assign.clone() }
    }

    fn from_doc(d: MapDoc) -> Result<Self> {
        Self::new(MetricSpace::from_value(d.source)?, MetricSpace::from_value(d.target)?, d.assign)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&self.doc())?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Self::from_doc(serde_json::from_str(s)?)
    }
}

impl Serialize for QuotientMap {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for QuotientMap {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        QuotientMap::from_doc(MapDoc::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipColip {
    pub lip: f64,
    pub colip: f64,
    pub product: f64,
    /// Single-point target: both constants are 1 by convention.
    pub degenerate: bool,
}

pub fn lip_colip(q: &QuotientMap) -> Result<LipColip> {
    let k = q.target.len();
    if k <= 1 {
        return Ok(LipColip { lip: 1.0, colip: 1.0, product: 1.0, degenerate: true });
    }
    let pre = q.preimages();
    let (mut lip, mut colip) = (0.0f64, 0.0f64);
    for y in 0..k {
        for z in y + 1..k {
            let dy = q.target.dist(y, z);
            lip = lip.max(dy / set_distance(&q.source, &pre[y], &pre[z])?);
            colip = colip.max(hausdorff(&q.source, &pre[y], &pre[z])? / dy);
        }
    }
    Ok(LipColip { lip, colip, product: lip * colip, degenerate: false })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LipCertificate {
    pub constants: LipColip,
    pub alpha: f64,
    pub pass: bool,
}

/// Passes when `lip * colip <= alpha` at tolerance.
pub fn certify_lip_quotient(q: &QuotientMap, alpha: f64) -> Result<LipCertificate> {
    let c = lip_colip(q)?;
    let pass = c.product <= alpha + TOL;
    Ok(LipCertificate { constants: c, alpha, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quotient::distortion_between;

    fn line(n: usize) -> MetricSpace {
        MetricSpace::from_fn(n, |i, j| (i as f64 - j as f64).abs())
    }

    #[test]
    fn bijection_matches_distortion() {
        let t = MetricSpace::from_fn(4, |i, j| ((i * i) as f64 - (j * j) as f64).abs());
        let q = QuotientMap::new(line(4), t.clone(), vec![0, 1, 2, 3]).unwrap();
        let c = lip_colip(&q).unwrap();
        let d = distortion_between(&line(4), &t, &[0, 1, 2, 3]).unwrap();
        assert_eq!(c.product, d.distortion);
    }

    #[test]
    fn pairs_to_points() {
        let q = QuotientMap::new(line(4), line(2).scaled(2.0), vec![0, 0, 1, 1]).unwrap();
        let c = lip_colip(&q).unwrap();
        assert_eq!(c.lip, 2.0);
        assert_eq!(c.colip, 1.0);
        assert!(certify_lip_quotient(&q, 2.0).unwrap().pass);
        assert!(!certify_lip_quotient(&q, 1.5).unwrap().pass);
    }

    #[test]
    fn single_target_is_degenerate() {
        let q = QuotientMap::new(line(3), line(1), vec![0, 0, 0]).unwrap();
        assert!(lip_colip(&q).unwrap().degenerate);
    }

    #[test]
    fn must_be_surjective() {
        assert!(QuotientMap::new(line(3), line(3), vec![0, 0, 1]).is_err());
    }
}
