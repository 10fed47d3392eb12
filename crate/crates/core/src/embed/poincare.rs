//! Poincare-type inequality for stars in `L_p` and the resulting distortion lower bound.

use crate::error::{param, structural, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PoincareCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    /// Lower bound on the `L_p` distortion of the star on `n` leaves with unit leaf distance 2.
    pub star_bound: f64,
}

/// `2` for `p <= 2`, `2^(p-1)` above.
pub fn poincare_factor(p: f64) -> f64 {
    if p <= 2.0 {
        2.0
    } else {
        2f64.powf(p - 1.0)
    }
}

/// `(2^(p-1) (n-1)/n)^(1/p)` for `p <= 2`, `(2 (n-1)/n)^(1/p)` above.
pub fn star_lower_bound(n: usize, p: f64) -> f64 {
    let tail = (n as f64 - 1.0) / n as f64;
    let lead = if p <= 2.0 { 2f64.powf(p - 1.0) } else { 2.0 };
    (lead * tail).powf(1.0 / p)
}

/// Checks `sum_ij |x_i - x_j|^p + |y_i - y_j|^p <= factor * sum_ij |x_i - y_j|^p`.
pub fn star_poincare_lower(p: f64, xs: &[Vec<f64>], ys: &[Vec<f64>]) -> Result<PoincareCheck> {
    if !(p >= 1.0) {
        return param(format!("p must be >= 1, got {p}"));
    }
    if xs.len() != ys.len() || xs.is_empty() {
        return structural("need two nonempty lists of equal length");
    }
    let dim = xs[0].len();
    if xs.iter().chain(ys).any(|v| v.len() != dim) {
        return structural("vectors have different dimensions");
    }
    let dp = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).abs().powf(p)).sum::<f64>();
    let n = xs.len();
    let (mut lhs, mut cross) = (0.0, 0.0);
    for i in 0..n {
        for j in 0..n {
            lhs += dp(&xs[i], &xs[j]) + dp(&ys[i], &ys[j]);
            cross += dp(&xs[i], &ys[j]);
        }
    }
    let rhs = poincare_factor(p) * cross;
    Ok(PoincareCheck { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-12) + 1e-300, star_bound: star_lower_bound(n, p) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_leaf_euclidean_bound_is_one() {
        assert_eq!(star_lower_bound(2, 2.0), 1.0);
    }

    #[test]
    fn equal_vectors_give_zero() {
        let v = vec![vec![1.0, 2.0]; 3];
        let c = star_poincare_lower(1.5, &v, &v).unwrap();
        assert_eq!(c.lhs, 0.0);
        assert!(c.holds);
    }

    #[test]
    fn mismatched_lengths() {
        assert!(star_poincare_lower(2.0, &[vec![0.0]], &[]).is_err());
    }
}
