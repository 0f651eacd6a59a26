//! Shared fixtures for the criterion benches.

use dimweight::datasets::{synthetic_gene_like, synthetic_two_class};
use dimweight::LabeledDataset;

/// Gene-expression-sized data: 72 samples, 2000 dimensions, 50 informative.
pub fn gene_fixture() -> LabeledDataset {
    synthetic_gene_like(72, 2000, 50, 7).expect("valid generator parameters")
}

/// Planar two-class data with `n` samples per class.
pub fn planar_fixture(n: usize) -> LabeledDataset {
    synthetic_two_class(n, 4.0, 1.0, 8.0, 7).expect("valid generator parameters")
}
