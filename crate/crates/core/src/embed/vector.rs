use crate::error::{structural, Result};
use crate::metric::{FiniteMetric, MetricSpace};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbedMode {
    Exact,
    MonteCarlo,
}

/// Points in a (weighted) `L_p` space.
///
/// With `weights`, the norm is `(sum_j w_j |v_j|^p)^(1/p)`, which is how atoms of a finite
/// probability space are stored. With `complex`, coordinates come in `(re, im)` pairs and
/// `|v_j|` is the modulus; `weights` then has one entry per pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VectorEmbedding {
    pub p: f64,
    pub mode: EmbedMode,
    pub vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub complex: bool,
}

impl VectorEmbedding {
    pub fn new(p: f64, mode: EmbedMode, vectors: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        let e = VectorEmbedding { p, mode, vectors, weights, complex: false };
        e.check()?;
        Ok(e)
    }

    pub fn complex(p: f64, mode: EmbedMode, vectors: Vec<Vec<f64>>, weights: Option<Vec<f64>>) -> Result<Self> {
        let e = VectorEmbedding { p, mode, vectors, weights, complex: true };
        e.check()?;
        Ok(e)
    }

    fn check(&self) -> Result<()> {
        let dim = self.vectors.first().map_or(0, |v| v.len());
        if self.vectors.iter().any(|v| v.len() != dim) {
            return structural("vectors have different lengths");
        }
        if self.complex && !dim.is_multiple_of(2) {
            return structural("complex vectors need an even number of real coordinates");
        }
        let slots = if self.complex { dim / 2 } else { dim };
        if let Some(w) = &self.weights {
            if w.len() != slots {
                return structural(format!("{} weights for {slots} coordinates", w.len()));
            }
        }
        Ok(())
    }

    fn norm_of(&self, diff: impl Fn(usize) -> f64) -> f64 {
        let dim = self.vectors.first().map_or(0, |v| v.len());
        let slots = if self.complex { dim / 2 } else { dim };
        let mut s = 0.0;
        for k in 0..slots {
            let mag = if self.complex { diff(2 * k).hypot(diff(2 * k + 1)) } else { diff(k).abs() };
            let w = self.weights.as_ref().map_or(1.0, |w| w[k]);
            s += w * if self.p == 2.0 { mag * mag } else { mag.powf(self.p) };
        }
        if self.p == 2.0 {
            s.sqrt()
        } else {
            s.powf(1.0 / self.p)
        }
    }

    pub fn norm(&self, i: usize) -> f64 {
        let v = &self.vectors[i];
        self.norm_of(|k| v[k])
    }

    pub fn dim(&self) -> usize {
        self.vectors.first().map_or(0, |v| v.len())
    }

    /// Materializes the pairwise distances.
    pub fn induced_metric(&self) -> MetricSpace {
        MetricSpace::from_fn(self.len(), |i, j| self.dist(i, j))
    }
}

impl FiniteMetric for VectorEmbedding {
    fn len(&self) -> usize {
        self.vectors.len()
    }

    fn dist(&self, i: usize, j: usize) -> f64 {
        let (a, b) = (&self.vectors[i], &self.vectors[j]);
        self.norm_of(|k| a[k] - b[k])
    }
}
