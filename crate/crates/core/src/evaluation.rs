//! Stratified cross-validation over a grid of neighbour counts and fold
//! counts, comparing the uniform-weight baseline against fitted weights.
//!
//! Both methods in a cell see the same fold assignment, and weights are
//! always fitted on the training folds only. A cell's accuracy is pooled:
//! correct predictions over all held-out samples. The per-method mean is the
//! plain average of the valid cells and the sd is the sample standard
//! deviation (divisor `cells − 1`).

use std::fmt::{self, Write as _};
use std::io::Write;

use rayon::prelude::*;

use crate::classifier::{KnnModel, KnnParams, WeightMode};
use crate::datasets::{fit_transform, LabeledDataset, PreprocessSpec};
use crate::error::{Error, Result};
use crate::metric::Norm;
use crate::rng::{derive_seed, hash_str, SeededRng};
use crate::weighting::{DegeneratePolicy, Kappa};

/// Per-sample fold indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldAssignment {
    folds: Vec<usize>,
    n_folds: usize,
    seed: u64,
}

impl FoldAssignment {
    pub fn n_folds(&self) -> usize {
        self.n_folds
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn fold_of(&self, sample: usize) -> usize {
        self.folds[sample]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.folds
    }

    pub fn test_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] == fold).collect()
    }

    pub fn train_indices(&self, fold: usize) -> Vec<usize> {
        (0..self.folds.len()).filter(|&i| self.folds[i] != fold).collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &f in &self.folds {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified assignment: each class, in ascending label order, is shuffled
/// and dealt round-robin over the folds. The dealing position carries over
/// from one class to the next so total fold sizes also stay balanced.
pub fn stratified_folds(labels: &[usize], n_folds: usize, seed: u64) -> Result<FoldAssignment> {
    if n_folds < 2 || n_folds > labels.len() {
        return Err(Error::InvalidFolds {
            folds: n_folds,
            samples: labels.len(),
        });
    }
    let n_classes = labels.iter().copied().max().map_or(0, |m| m + 1);
    let mut rng = SeededRng::new(seed);
    let mut folds = vec![0; labels.len()];
    let mut next = 0;
    for class in 0..n_classes {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        rng.shuffle(&mut members);
        for i in members {
            folds[i] = next;
            next = (next + 1) % n_folds;
        }
    }
    Ok(FoldAssignment {
        folds,
        n_folds,
        seed,
    })
}

/// Fraction of positions where `predictions` and `truth` agree.
pub fn accuracy<T: PartialEq>(predictions: &[T], truth: &[T]) -> Result<f64> {
    if predictions.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            left: predictions.len(),
            right: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(Error::InvalidParameter("accuracy of an empty sequence".into()));
    }
    let correct = predictions.iter().zip(truth).filter(|(p, t)| p == t).count();
    Ok(correct as f64 / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    /// All-ones weights.
    Baseline,
    /// Weights fitted on the training folds.
    Proposed,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Baseline => "baseline",
            Method::Proposed => "proposed",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "baseline" | "uniform" => Ok(Method::Baseline),
            "proposed" => Ok(Method::Proposed),
            _ => Err(Error::InvalidParameter(format!("unknown method {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Aggregation {
    /// Correct over total across all folds.
    #[default]
    Pooled,
    /// Average of per-fold accuracies.
    MeanOfFolds,
}

#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub k_values: Vec<usize>,
    pub fold_counts: Vec<usize>,
    /// Norm of the weighted method.
    pub norm: Norm,
    /// Norm of the uniform-weight baseline.
    pub baseline_norm: Norm,
    pub kappa: Kappa,
    pub methods: Vec<Method>,
    pub seed: u64,
    pub preprocess: PreprocessSpec,
    pub aggregation: Aggregation,
    pub degenerate: DegeneratePolicy,
}

impl Default for ExperimentSpec {
    fn default() -> Self {
        Self {
            k_values: vec![1, 3, 5],
            fold_counts: vec![3, 5, 10],
            norm: Norm::EUCLIDEAN,
            baseline_norm: Norm::EUCLIDEAN,
            kappa: Kappa::ZERO,
            methods: vec![Method::Baseline, Method::Proposed],
            seed: 42,
            preprocess: PreprocessSpec::default(),
            aggregation: Aggregation::default(),
            degenerate: DegeneratePolicy::default(),
        }
    }
}

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k_values.is_empty() || self.k_values.contains(&0) {
            return Err(Error::InvalidParameter("k values must be non-empty and positive".into()));
        }
        if self.fold_counts.is_empty() || self.fold_counts.iter().any(|&f| f < 2) {
            return Err(Error::InvalidParameter("fold counts must be non-empty and ≥ 2".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        Ok(())
    }

    /// Column heading for a method in the text table.
    pub fn method_label(&self, method: Method) -> String {
        match method {
            Method::Baseline if self.baseline_norm == Norm::EUCLIDEAN => "KNN (Euclidean)".into(),
            Method::Baseline if self.baseline_norm == Norm::MANHATTAN => "KNN (Manhattan)".into(),
            Method::Baseline if self.baseline_norm.is_infinite() => "KNN (Chebyshev)".into(),
            Method::Baseline => format!("KNN (p={})", self.baseline_norm),
            Method::Proposed => "KNN (Proposed Distance)".into(),
        }
    }

    fn params(&self, method: Method, k: usize) -> KnnParams {
        let mut params = match method {
            Method::Baseline => KnnParams::new(k, self.baseline_norm, Kappa::ONE, WeightMode::Uniform),
            Method::Proposed => KnnParams::new(k, self.norm, self.kappa, WeightMode::Proposed),
        };
        params.degenerate = self.degenerate;
        params
    }
}

/// Seed of the fold assignment for one dataset and fold count. Every method
/// and every k with that fold count share it.
pub fn fold_seed(master: u64, dataset_id: &str, n_folds: usize) -> u64 {
    derive_seed(master, &[hash_str(dataset_id), n_folds as u64])
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldOutcome {
    pub fold: usize,
    pub n_test: usize,
    pub n_correct: usize,
    /// Weights the model used on this fold.
    pub weights: Vec<f64>,
    /// Predicted labels for the fold's test rows, in ascending row order.
    pub predictions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellScore {
    pub accuracy: f64,
    pub folds: Vec<FoldOutcome>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CellResult {
    pub method: Method,
    pub k: usize,
    pub n_folds: usize,
    pub fold_seed: u64,
    pub outcome: std::result::Result<CellScore, String>,
}

impl CellResult {
    pub fn accuracy(&self) -> Option<f64> {
        self.outcome.as_ref().ok().map(|s| s.accuracy)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodSummary {
    pub method: Method,
    pub label: String,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
    pub valid_cells: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub dataset: String,
    pub seed: u64,
    pub k_values: Vec<usize>,
    pub fold_counts: Vec<usize>,
    pub cells: Vec<CellResult>,
    pub summaries: Vec<MethodSummary>,
}

/// Trains on all folds but `fold` and scores the held-out fold.
pub fn evaluate_fold(
    data: &LabeledDataset,
    folds: &FoldAssignment,
    fold: usize,
    params: &KnnParams,
    preprocess: PreprocessSpec,
) -> Result<FoldOutcome> {
    let train_idx = folds.train_indices(fold);
    let test_idx = folds.test_indices(fold);
    if train_idx.is_empty() {
        return Err(Error::InvalidParameter(format!("fold {fold} leaves no training data")));
    }
    let transform = fit_transform(data, preprocess, &train_idx)?;
    let train = transform.apply(&data.subset(&train_idx))?;
    let test = transform.apply(&data.subset(&test_idx))?;
    let model = KnnModel::fit(&train, params)?;
    let predictions: Vec<usize> = model.predict_dataset(&test)?.into_iter().map(|p| p.label).collect();
    let n_correct = predictions.iter().zip(test.labels()).filter(|(p, t)| p == t).count();
    Ok(FoldOutcome {
        fold,
        n_test: test_idx.len(),
        n_correct,
        weights: model.weights().map(<[f64]>::to_vec).unwrap_or_default(),
        predictions,
    })
}

/// Runs every fold of one `(method, k)` cell on a given assignment.
pub fn evaluate_cell(
    data: &LabeledDataset,
    folds: &FoldAssignment,
    params: &KnnParams,
    preprocess: PreprocessSpec,
    aggregation: Aggregation,
) -> Result<CellScore> {
    let outcomes = (0..folds.n_folds())
        .map(|f| evaluate_fold(data, folds, f, params, preprocess))
        .collect::<Result<Vec<_>>>()?;
    let accuracy = match aggregation {
        Aggregation::Pooled => {
            let correct: usize = outcomes.iter().map(|o| o.n_correct).sum();
            let total: usize = outcomes.iter().map(|o| o.n_test).sum();
            correct as f64 / total as f64
        }
        Aggregation::MeanOfFolds => {
            let non_empty: Vec<&FoldOutcome> = outcomes.iter().filter(|o| o.n_test > 0).collect();
            non_empty.iter().map(|o| o.n_correct as f64 / o.n_test as f64).sum::<f64>() / non_empty.len() as f64
        }
    };
    Ok(CellScore {
        accuracy,
        folds: outcomes,
    })
}

/// Mean and sample standard deviation; `sd` needs at least two values.
pub fn mean_sd(values: &[f64]) -> (Option<f64>, Option<f64>) {
    if values.is_empty() {
        return (None, None);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let sd = (values.len() > 1)
        .then(|| (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt());
    (Some(mean), sd)
}

pub fn cross_validate(spec: &ExperimentSpec, data: &LabeledDataset) -> Result<EvaluationReport> {
    spec.validate()?;
    let assignments: Vec<(usize, u64, std::result::Result<FoldAssignment, String>)> = spec
        .fold_counts
        .iter()
        .map(|&f| {
            let seed = fold_seed(spec.seed, data.id(), f);
            (f, seed, stratified_folds(data.labels(), f, seed).map_err(|e| e.to_string()))
        })
        .collect();

    let mut grid = Vec::new();
    for &method in &spec.methods {
        for &k in &spec.k_values {
            for a in 0..assignments.len() {
                grid.push((method, k, a));
            }
        }
    }

    let cells: Vec<CellResult> = grid
        .par_iter()
        .map(|&(method, k, a)| {
            let (n_folds, seed, folds) = &assignments[a];
            let outcome = folds.clone().and_then(|folds| {
                evaluate_cell(data, &folds, &spec.params(method, k), spec.preprocess, spec.aggregation)
                    .map_err(|e| e.to_string())
            });
            if let Err(e) = &outcome {
                log::warn!("{} {method} k={k} folds={n_folds}: {e}", data.id());
            }
            CellResult {
                method,
                k,
                n_folds: *n_folds,
                fold_seed: *seed,
                outcome,
            }
        })
        .collect();

    let summaries = spec
        .methods
        .iter()
        .map(|&method| {
            let accs: Vec<f64> = cells
                .iter()
                .filter(|c| c.method == method)
                .filter_map(CellResult::accuracy)
                .collect();
            let (mean, sd) = mean_sd(&accs);
            MethodSummary {
                method,
                label: spec.method_label(method),
                mean,
                sd,
                valid_cells: accs.len(),
            }
        })
        .collect();

    Ok(EvaluationReport {
        dataset: data.id().to_string(),
        seed: spec.seed,
        k_values: spec.k_values.clone(),
        fold_counts: spec.fold_counts.clone(),
        cells,
        summaries,
    })
}

fn fmt_opt(v: Option<f64>, width: usize) -> String {
    match v {
        Some(v) => format!("{v:<width$.4}"),
        None => format!("{:<width$}", "n/a"),
    }
}

impl EvaluationReport {
    pub fn cell(&self, method: Method, k: usize, n_folds: usize) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.method == method && c.k == k && c.n_folds == n_folds)
    }

    pub fn summary(&self, method: Method) -> Option<&MethodSummary> {
        self.summaries.iter().find(|s| s.method == method)
    }

    pub fn mean(&self, method: Method) -> Option<f64> {
        self.summary(method).and_then(|s| s.mean)
    }

    /// Aligned table: one row per `(k, folds)`, one column per method, then
    /// `Mean` and `sd` rows.
    pub fn render_table(&self) -> String {
        let width = self
            .summaries
            .iter()
            .map(|s| s.label.len())
            .max()
            .unwrap_or(8)
            .max(8)
            + 2;
        let mut out = String::new();
        let _ = writeln!(out, "dataset: {}", self.dataset);
        let _ = write!(out, "{:<4}{:<8}", "k", "n-fold");
        for s in &self.summaries {
            let _ = write!(out, "{:<width$}", s.label);
        }
        out.push('\n');
        for &k in &self.k_values {
            for (i, &f) in self.fold_counts.iter().enumerate() {
                let k_col = if i == 0 { k.to_string() } else { String::new() };
                let _ = write!(out, "{k_col:<4}{f:<8}");
                for s in &self.summaries {
                    let acc = self.cell(s.method, k, f).and_then(CellResult::accuracy);
                    out.push_str(&fmt_opt(acc, width));
                }
                out.push('\n');
            }
        }
        let _ = write!(out, "{:<12}", "Mean");
        for s in &self.summaries {
            out.push_str(&fmt_opt(s.mean, width));
        }
        out.push('\n');
        let _ = write!(out, "{:<12}", "sd");
        for s in &self.summaries {
            out.push_str(&fmt_opt(s.sd, width));
        }
        out.push('\n');
        for c in &self.cells {
            if let Err(e) = &c.outcome {
                let _ = writeln!(out, "invalid: {} k={} folds={}: {e}", c.method, c.k, c.n_folds);
            }
        }
        out.trim_end_matches(char::is_whitespace).to_string() + "\n"
    }

    /// One record per cell: `dataset,method,k,folds,accuracy,seed,error`.
    /// `seed` is the fold-assignment seed of the cell.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let to_err = |e: csv::Error| Error::Csv {
            path: "<report>".into(),
            message: e.to_string(),
        };
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["dataset", "method", "k", "folds", "accuracy", "seed", "error"])
            .map_err(to_err)?;
        for c in &self.cells {
            let (acc, err) = match &c.outcome {
                Ok(s) => (s.accuracy.to_string(), String::new()),
                Err(e) => (String::new(), e.clone()),
            };
            w.write_record([
                self.dataset.as_str(),
                c.method.name(),
                &c.k.to_string(),
                &c.n_folds.to_string(),
                &acc,
                &c.fold_seed.to_string(),
                &err,
            ])
            .map_err(to_err)?;
        }
        w.flush().map_err(|e| Error::Io {
            path: "<report>".into(),
            source: e,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: Method,
    pub label: String,
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

/// Mean/sd per dataset and method, copied from each report.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

pub fn summarize(reports: &[EvaluationReport]) -> Result<SummaryTable> {
    if reports.is_empty() {
        return Err(Error::InvalidParameter("nothing to summarize".into()));
    }
    let rows = reports
        .iter()
        .flat_map(|r| {
            r.summaries.iter().map(|s| SummaryRow {
                dataset: r.dataset.clone(),
                method: s.method,
                label: s.label.clone(),
                mean: s.mean,
                sd: s.sd,
            })
        })
        .collect();
    Ok(SummaryTable { rows })
}

impl SummaryTable {
    pub fn render(&self) -> String {
        let mut out = format!("{:<16}{:<26}{:<10}{:<10}\n", "dataset", "method", "mean", "sd");
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{:<16}{:<26}{}{}",
                r.dataset,
                r.label,
                fmt_opt(r.mean, 10),
                fmt_opt(r.sd, 10)
            );
        }
        out
    }
}
