//! Per-dimension weights from class separability.
//!
//! The fitness of dimension `i` sums, over every unordered pair of classes
//! `(s, t)`, the ratio
//!
//! ```text
//! |μ_s,i − μ_t,i| / (σ_s,i + σ_t,i)
//! ```
//!
//! using per-class means and population standard deviations. Fitness values
//! `λ` become weights through
//!
//! ```text
//! w_i = κ + (1 − κ) · n · λ_i / Σ λ
//! ```
//!
//! which always sums to `n`. `κ = 0` trusts the fitness fully; `κ = 1`
//! gives all-ones weights.

use crate::datasets::LabeledDataset;
use crate::error::{Error, Result};
use crate::metric::WeightVector;

/// Floor for `σ_s + σ_t` when two classes are constant but different.
pub const SEPARABILITY_EPSILON: f64 = 1e-12;

/// Interpolation constant in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Kappa(f64);

impl Kappa {
    pub const ZERO: Kappa = Kappa(0.0);
    pub const ONE: Kappa = Kappa(1.0);

    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::InvalidKappa(value));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// Per-dimension fitness `λ_i ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FitnessVector(Vec<f64>);

impl FitnessVector {
    pub fn new(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::EmptyVector);
        }
        for (i, &l) in lambdas.iter().enumerate() {
            if !l.is_finite() {
                return Err(Error::NonFinite { index: i, value: l });
            }
            if l < 0.0 {
                return Err(Error::DegenerateFitness(format!(
                    "fitness {i} is negative ({l})"
                )));
            }
        }
        Ok(Self(lambdas))
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
}

/// Per-class, per-dimension means and population standard deviations over
/// the classes present in a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStatistics {
    /// Encoded labels of the classes present, ascending.
    pub classes: Vec<usize>,
    pub counts: Vec<usize>,
    /// `means[c][i]` for the `c`-th present class.
    pub means: Vec<Vec<f64>>,
    pub stds: Vec<Vec<f64>>,
}

impl ClassStatistics {
    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_dims(&self) -> usize {
        self.means.first().map_or(0, Vec::len)
    }
}

pub fn class_statistics(data: &LabeledDataset) -> Result<ClassStatistics> {
    if data.n_samples() == 0 {
        return Err(Error::EmptyDataset);
    }
    let n = data.n_dims();
    let all_counts = data.class_counts();
    let classes: Vec<usize> = (0..data.n_classes()).filter(|&c| all_counts[c] > 0).collect();
    let mut slot = vec![usize::MAX; data.n_classes()];
    for (k, &c) in classes.iter().enumerate() {
        slot[c] = k;
    }
    let counts: Vec<usize> = classes.iter().map(|&c| all_counts[c]).collect();

    let mut means = vec![vec![0.0; n]; classes.len()];
    for (row, &label) in data.rows().zip(data.labels()) {
        for (m, v) in means[slot[label]].iter_mut().zip(row) {
            *m += v;
        }
    }
    for (m, &count) in means.iter_mut().zip(&counts) {
        m.iter_mut().for_each(|v| *v /= count as f64);
    }

    let mut stds = vec![vec![0.0; n]; classes.len()];
    for (row, &label) in data.rows().zip(data.labels()) {
        let k = slot[label];
        for ((acc, v), m) in stds[k].iter_mut().zip(row).zip(&means[k]) {
            *acc += (v - m) * (v - m);
        }
    }
    for (s, &count) in stds.iter_mut().zip(&counts) {
        s.iter_mut().for_each(|v| *v = (*v / count as f64).sqrt());
    }

    Ok(ClassStatistics {
        classes,
        counts,
        means,
        stds,
    })
}

/// Pairwise class-separability fitness.
pub fn fitness(stats: &ClassStatistics) -> Result<FitnessVector> {
    let m = stats.n_classes();
    if m < 2 {
        return Err(Error::TooFewClasses(m));
    }
    let lambdas = (0..stats.n_dims())
        .map(|i| {
            let mut total = 0.0;
            for s in 0..m {
                for t in s + 1..m {
                    let gap = (stats.means[s][i] - stats.means[t][i]).abs();
                    if gap == 0.0 {
                        continue;
                    }
                    let spread = (stats.stds[s][i] + stats.stds[t][i]).max(SEPARABILITY_EPSILON);
                    total += gap / spread;
                }
            }
            total
        })
        .collect();
    FitnessVector::new(lambdas)
}

/// What to do when every fitness value is zero and `κ < 1`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum DegeneratePolicy {
    /// Fall back to all-ones weights and log a warning.
    #[default]
    Uniform,
    /// Return [`Error::DegenerateFitness`].
    Strict,
}

pub fn weights_from_fitness(lambdas: &FitnessVector, kappa: Kappa) -> Result<WeightVector> {
    weights_from_fitness_with(lambdas, kappa, DegeneratePolicy::default())
}

pub fn weights_from_fitness_with(
    lambdas: &FitnessVector,
    kappa: Kappa,
    policy: DegeneratePolicy,
) -> Result<WeightVector> {
    let n = lambdas.len();
    if n == 0 {
        return Err(Error::EmptyVector);
    }
    let k = kappa.value();
    if k == 1.0 {
        return WeightVector::uniform(n);
    }
    let total: f64 = lambdas.as_slice().iter().sum();
    if !total.is_finite() {
        return Err(Error::DegenerateFitness(format!("fitness sum is {total}")));
    }
    if total == 0.0 {
        return match policy {
            DegeneratePolicy::Uniform => {
                log::warn!("all dimension fitness values are zero; using uniform weights");
                WeightVector::uniform(n)
            }
            DegeneratePolicy::Strict => Err(Error::DegenerateFitness(
                "all dimension fitness values are zero".into(),
            )),
        };
    }
    let scale = (1.0 - k) * n as f64;
    let weights = lambdas
        .as_slice()
        .iter()
        .map(|&l| k + scale * (l / total))
        .collect();
    WeightVector::new(weights)
}

/// A per-dimension fitness function over labeled data.
pub trait Fitness: Send + Sync {
    fn fitness(&self, data: &LabeledDataset) -> Result<FitnessVector>;
}

/// The built-in pairwise class-separability fitness.
#[derive(Debug, Clone, Copy, Default)]
pub struct PairwiseSeparability;

impl Fitness for PairwiseSeparability {
    fn fitness(&self, data: &LabeledDataset) -> Result<FitnessVector> {
        fitness(&class_statistics(data)?)
    }
}

impl<F> Fitness for F
where
    F: Fn(&LabeledDataset) -> Result<FitnessVector> + Send + Sync,
{
    fn fitness(&self, data: &LabeledDataset) -> Result<FitnessVector> {
        self(data)
    }
}

/// Fitness, then weights, with the built-in fitness and default policy.
pub fn fit_weights(data: &LabeledDataset, kappa: Kappa) -> Result<WeightVector> {
    fit_weights_with(data, kappa, &PairwiseSeparability, DegeneratePolicy::default())
}

pub fn fit_weights_with(
    data: &LabeledDataset,
    kappa: Kappa,
    fitness_fn: &dyn Fitness,
    policy: DegeneratePolicy,
) -> Result<WeightVector> {
    let lambdas = fitness_fn.fitness(data)?;
    if lambdas.len() != data.n_dims() {
        return Err(Error::DimensionMismatch {
            left: lambdas.len(),
            right: data.n_dims(),
        });
    }
    weights_from_fitness_with(&lambdas, kappa, policy)
}
