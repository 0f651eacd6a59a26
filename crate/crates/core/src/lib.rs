//! Weighted Minkowski distances with class-separability dimension weights,
//! and a k-nearest-neighbour classifier built on them.
//!
//! * [`metric`]: the distance family, from Manhattan through the Chebyshev
//!   limit, with optional per-dimension weights.
//! * [`weighting`]: per-dimension fitness from class means and spreads, and
//!   the κ-schema that turns it into weights.
//! * [`classifier`]: brute-force KNN with deterministic tie handling.
//! * [`evaluation`]: stratified cross-validation over a `(k, folds)` grid.
//! * [`datasets`]: CSV ingestion, synthetic generators, standardisation.
//! * [`geometry`]: unidistant boundaries in the plane.

pub mod classifier;
pub mod datasets;
pub mod error;
pub mod evaluation;
pub mod geometry;
pub mod metric;
pub mod rng;
pub mod weighting;

pub use classifier::{KnnModel, KnnParams, Prediction, WeightMode};
pub use datasets::{load_csv, LabelColumn, LabeledDataset, PreprocessSpec};
pub use error::{Error, Result};
pub use evaluation::{cross_validate, EvaluationReport, ExperimentSpec, Method};
pub use metric::{minkowski_distance, weighted_minkowski_distance, MetricSpec, Norm, WeightVector};
pub use weighting::{fit_weights, DegeneratePolicy, FitnessVector, Kappa};
