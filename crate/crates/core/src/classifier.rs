//! K-nearest-neighbour classification under a weighted Minkowski metric.
//!
//! Neighbour search is exact brute force. Ties are resolved
//! deterministically:
//!
//! * equal distances at the k-th boundary go to the lower training-row index;
//! * when several classes share the highest vote count, the class whose
//!   nearest member among the neighbours is closest wins, then the lowest
//!   class index.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::{kernel, MetricSpec, Norm, WeightVector};
use crate::weighting::{fit_weights_with, DegeneratePolicy, Fitness, Kappa, PairwiseSeparability};

/// How a model obtains its dimension weights.
#[derive(Debug, Clone, PartialEq)]
pub enum WeightMode {
    /// Fitted from the training data with the separability schema.
    Proposed,
    /// All ones: the ordinary Minkowski KNN.
    Uniform,
    Explicit(WeightVector),
}

#[derive(Debug, Clone)]
pub struct KnnParams {
    pub k: usize,
    pub norm: Norm,
    pub kappa: Kappa,
    pub weight_mode: WeightMode,
    pub degenerate: DegeneratePolicy,
}

impl KnnParams {
    pub fn new(k: usize, norm: Norm, kappa: Kappa, weight_mode: WeightMode) -> Self {
        Self {
            k,
            norm,
            kappa,
            weight_mode,
            degenerate: DegeneratePolicy::default(),
        }
    }

    pub fn uniform(k: usize, norm: Norm) -> Self {
        Self::new(k, norm, Kappa::ONE, WeightMode::Uniform)
    }

    pub fn proposed(k: usize, norm: Norm, kappa: Kappa) -> Self {
        Self::new(k, norm, kappa, WeightMode::Proposed)
    }
}

/// A fitted classifier; immutable once built.
#[derive(Debug, Clone)]
pub struct KnnModel {
    train: LabeledDataset,
    metric: MetricSpec,
    k: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    /// Training-row indices, nearest first.
    pub neighbors: Vec<usize>,
    pub distances: Vec<f64>,
    /// Votes per class, indexed by encoded label; sums to `k`.
    pub votes: Vec<usize>,
}

impl KnnModel {
    pub fn fit(train: &LabeledDataset, params: &KnnParams) -> Result<Self> {
        Self::fit_with(train, params, &PairwiseSeparability)
    }

    /// Like [`KnnModel::fit`] but with a custom fitness for the proposed mode.
    pub fn fit_with(train: &LabeledDataset, params: &KnnParams, fitness: &dyn Fitness) -> Result<Self> {
        let weights = match &params.weight_mode {
            WeightMode::Uniform => WeightVector::uniform(train.n_dims())?,
            WeightMode::Explicit(w) => w.clone(),
            WeightMode::Proposed => fit_weights_with(train, params.kappa, fitness, params.degenerate)?,
        };
        Self::with_metric(train, params.k, MetricSpec::weighted(params.norm, weights))
    }

    pub fn with_metric(train: &LabeledDataset, k: usize, metric: MetricSpec) -> Result<Self> {
        if train.n_samples() == 0 {
            return Err(Error::EmptyDataset);
        }
        if k == 0 || k > train.n_samples() {
            return Err(Error::InvalidK {
                k,
                n: train.n_samples(),
            });
        }
        if let Some(w) = metric.weights() {
            if w.len() != train.n_dims() {
                return Err(Error::DimensionMismatch {
                    left: w.len(),
                    right: train.n_dims(),
                });
            }
        }
        Ok(Self {
            train: train.clone(),
            metric,
            k,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn metric(&self) -> &MetricSpec {
        &self.metric
    }

    pub fn weights(&self) -> Option<&[f64]> {
        self.metric.weights()
    }

    pub fn train(&self) -> &LabeledDataset {
        &self.train
    }

    pub fn n_dims(&self) -> usize {
        self.train.n_dims()
    }

    pub fn predict(&self, query: &[f64]) -> Result<Prediction> {
        if query.len() != self.n_dims() {
            return Err(Error::DimensionMismatch {
                left: query.len(),
                right: self.n_dims(),
            });
        }
        if let Some(i) = query.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                index: i,
                value: query[i],
            });
        }
        let weights = self.metric.weights();
        let mut scored: Vec<(f64, usize)> = self
            .train
            .rows()
            .enumerate()
            .map(|(i, row)| (kernel(query, row, weights, self.metric.norm), i))
            .collect();

        let by_distance_then_index =
            |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < scored.len() {
            scored.select_nth_unstable_by(self.k - 1, by_distance_then_index);
            scored.truncate(self.k);
        }
        scored.sort_unstable_by(by_distance_then_index);

        let labels = self.train.labels();
        let mut votes = vec![0usize; self.train.n_classes()];
        // distance of each class's nearest neighbour, from the sorted list
        let mut nearest = vec![f64::INFINITY; self.train.n_classes()];
        for &(d, i) in &scored {
            let c = labels[i];
            votes[c] += 1;
            if d < nearest[c] {
                nearest[c] = d;
            }
        }
        let label = plurality(&votes, &nearest);
        let (distances, neighbors) = scored.into_iter().unzip();
        Ok(Prediction {
            label,
            neighbors,
            distances,
            votes,
        })
    }

    /// Predictions for every row, in input order.
    pub fn predict_batch<Q>(&self, queries: &[Q]) -> Result<Vec<Prediction>>
    where
        Q: AsRef<[f64]> + Sync,
    {
        queries.par_iter().map(|q| self.predict(q.as_ref())).collect()
    }

    pub fn predict_dataset(&self, data: &LabeledDataset) -> Result<Vec<Prediction>> {
        let rows: Vec<&[f64]> = data.rows().collect();
        self.predict_batch(&rows)
    }

    /// Distance from `query` to its k-th nearest training sample.
    pub fn kth_distance(&self, query: &[f64]) -> Result<f64> {
        let p = self.predict(query)?;
        Ok(*p.distances.last().expect("k ≥ 1"))
    }
}

fn plurality(votes: &[usize], nearest: &[f64]) -> usize {
    let top = votes.iter().copied().max().unwrap_or(0);
    (0..votes.len())
        .filter(|&c| votes[c] == top && top > 0)
        .min_by(|&a, &b| match nearest[a].total_cmp(&nearest[b]) {
            Ordering::Equal => a.cmp(&b),
            o => o,
        })
        .expect("at least one vote")
}
