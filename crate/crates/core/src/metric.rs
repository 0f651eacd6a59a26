//! Weighted Minkowski distances.
//!
//! For a norm `p ≥ 1` and non-negative weights summing to the dimensionality
//! `n`, the distance between `x` and `y` is
//!
//! ```text
//! d(x, y) = (Σ w_i |x_i − y_i|^p)^(1/p)
//! ```
//!
//! With all weights equal to one this is the ordinary Minkowski distance:
//! Manhattan at `p = 1`, Euclidean at `p = 2`. The Chebyshev distance is the
//! `p → ∞` limit and is represented by [`Norm::INFINITE`], computed as a
//! maximum rather than as a very large power.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Relative tolerance on the weight-sum constraint `Σ w_i = n`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
enum NormKind {
    Finite(f64),
    Infinite,
}

/// The order `p` of a Minkowski distance, or the Chebyshev limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Norm(NormKind);

impl Norm {
    pub const MANHATTAN: Norm = Norm(NormKind::Finite(1.0));
    pub const EUCLIDEAN: Norm = Norm(NormKind::Finite(2.0));
    pub const INFINITE: Norm = Norm(NormKind::Infinite);

    /// A finite norm. `p` must be a finite real `≥ 1`; `+∞` maps to the
    /// Chebyshev limit.
    pub fn finite(p: f64) -> Result<Self> {
        if p == f64::INFINITY {
            return Ok(Self::INFINITE);
        }
        if !p.is_finite() || p < 1.0 {
            return Err(Error::InvalidNorm(p));
        }
        Ok(Norm(NormKind::Finite(p)))
    }

    /// `Some(p)` for finite norms, `None` for the Chebyshev limit.
    pub fn p(&self) -> Option<f64> {
        match self.0 {
            NormKind::Finite(p) => Some(p),
            NormKind::Infinite => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self.0, NormKind::Infinite)
    }
}

impl fmt::Display for Norm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0 {
            NormKind::Finite(p) => write!(f, "{p}"),
            NormKind::Infinite => f.write_str("inf"),
        }
    }
}

impl FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        match s.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" | "chebyshev" => Ok(Self::INFINITE),
            other => {
                let p: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("cannot parse norm {s:?}")))?;
                Self::finite(p)
            }
        }
    }
}

/// Per-dimension importance weights with `w_i ≥ 0` and `Σ w_i = n`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::EmptyVector);
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFinite { index: i, value: w });
            }
            if w < 0.0 {
                return Err(Error::InvalidWeights(format!(
                    "weight {i} is negative ({w})"
                )));
            }
        }
        let n = weights.len() as f64;
        let sum: f64 = weights.iter().sum();
        if (sum - n).abs() > WEIGHT_SUM_TOLERANCE * n {
            return Err(Error::InvalidWeights(format!(
                "weights sum to {sum}, expected {n}"
            )));
        }
        Ok(Self(weights))
    }

    /// All-ones weights.
    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::EmptyVector);
        }
        Ok(Self(vec![1.0; n]))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn is_uniform(&self) -> bool {
        self.0.iter().all(|&w| w == 1.0)
    }
}

/// A norm together with optional per-dimension weights (absent = all ones).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSpec {
    pub norm: Norm,
    pub weights: Option<WeightVector>,
}

impl MetricSpec {
    pub fn new(norm: Norm, weights: Option<WeightVector>) -> Self {
        Self { norm, weights }
    }

    pub fn unweighted(norm: Norm) -> Self {
        Self {
            norm,
            weights: None,
        }
    }

    pub fn weighted(norm: Norm, weights: WeightVector) -> Self {
        Self {
            norm,
            weights: Some(weights),
        }
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.weights.as_ref().map(WeightVector::as_slice)
    }

    pub fn distance(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        weighted_minkowski_distance(x, y, self)
    }
}

fn check_pair(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.is_empty() {
        return Err(Error::EmptyVector);
    }
    for (i, &v) in x.iter().chain(y.iter()).enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                index: i % x.len(),
                value: v,
            });
        }
    }
    Ok(())
}

/// Ordinary (unweighted) Minkowski distance.
pub fn minkowski_distance(x: &[f64], y: &[f64], norm: Norm) -> Result<f64> {
    check_pair(x, y)?;
    Ok(kernel(x, y, None, norm))
}

/// Weighted Minkowski distance. For the infinite norm the weights drop out in
/// the limit, leaving the Chebyshev distance over dimensions with non-zero
/// weight.
pub fn weighted_minkowski_distance(x: &[f64], y: &[f64], spec: &MetricSpec) -> Result<f64> {
    check_pair(x, y)?;
    let weights = spec.weights();
    if let Some(w) = weights {
        if w.len() != x.len() {
            return Err(Error::DimensionMismatch {
                left: w.len(),
                right: x.len(),
            });
        }
        if let Some(i) = w.iter().position(|&wi| wi.is_nan() || wi < 0.0) {
            return Err(Error::InvalidWeights(format!(
                "weight {i} is negative ({})",
                w[i]
            )));
        }
    }
    Ok(kernel(x, y, weights, spec.norm))
}

/// Distance core. Inputs are already validated. Sums run in ascending index
/// order; a weight of exactly 1.0 leaves each term bit-identical to the
/// unweighted term.
pub(crate) fn kernel(x: &[f64], y: &[f64], weights: Option<&[f64]>, norm: Norm) -> f64 {
    let weight = |i: usize| weights.map_or(1.0, |w| w[i]);
    match norm.0 {
        NormKind::Infinite => x
            .iter()
            .zip(y)
            .enumerate()
            .filter(|&(i, _)| weight(i) > 0.0)
            .map(|(_, (a, b))| (a - b).abs())
            .fold(0.0, f64::max),
        NormKind::Finite(1.0) => x
            .iter()
            .zip(y)
            .enumerate()
            .map(|(i, (a, b))| weight(i) * (a - b).abs())
            .sum(),
        NormKind::Finite(p) => {
            // Scale by the largest active |Δ| so |Δ|^p neither overflows nor
            // underflows for large p.
            let scale = x
                .iter()
                .zip(y)
                .enumerate()
                .filter(|&(i, _)| weight(i) > 0.0)
                .map(|(_, (a, b))| (a - b).abs())
                .fold(0.0, f64::max);
            if scale == 0.0 {
                return 0.0;
            }
            let sum: f64 = if p == 2.0 {
                x.iter()
                    .zip(y)
                    .enumerate()
                    .map(|(i, (a, b))| {
                        let r = (a - b).abs() / scale;
                        weight(i) * (r * r)
                    })
                    .sum()
            } else {
                x.iter()
                    .zip(y)
                    .enumerate()
                    .map(|(i, (a, b))| weight(i) * ((a - b).abs() / scale).powf(p))
                    .sum()
            };
            let root = if p == 2.0 { sum.sqrt() } else { sum.powf(1.0 / p) };
            scale * root
        }
    }
}

/// Distances between every row of `a` and every row of `b`.
///
/// Entry `[i][j]` is bit-identical to `weighted_minkowski_distance(a[i], b[j])`.
pub fn pairwise_distance_matrix<A, B>(a: &[A], b: &[B], spec: &MetricSpec) -> Result<Vec<Vec<f64>>>
where
    A: AsRef<[f64]> + Sync,
    B: AsRef<[f64]> + Sync,
{
    a.par_iter()
        .map(|row| {
            b.iter()
                .map(|other| weighted_minkowski_distance(row.as_ref(), other.as_ref(), spec))
                .collect()
        })
        .collect()
}
