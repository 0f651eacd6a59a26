//! Labeled datasets: CSV ingestion, synthetic generators and z-score
//! preprocessing.
//!
//! CSV files are UTF-8, comma separated, with an optional header row and one
//! label column selected by name or zero-based index. Every other cell must
//! parse as a finite real; missing cells are an error. Class labels are
//! re-encoded to `0..m` in lexicographic order of their original names.

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    id: String,
    features: Vec<f64>,
    n_dims: usize,
    labels: Vec<usize>,
    class_names: Vec<String>,
    dim_names: Option<Vec<String>>,
}

impl LabeledDataset {
    /// Builds a dataset from rows and integer labels. `class_names[c]` names
    /// class `c`; every label must index into it.
    pub fn new(
        id: impl Into<String>,
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n_dims = rows.first().map_or(0, Vec::len);
        let mut features = Vec::with_capacity(rows.len() * n_dims);
        for (r, row) in rows.iter().enumerate() {
            if row.len() != n_dims {
                return Err(Error::InvalidDataset(format!(
                    "row {r} has {} values, expected {n_dims}",
                    row.len()
                )));
            }
            features.extend_from_slice(row);
        }
        Self::from_flat(id, features, n_dims, labels, class_names)
    }

    pub fn from_flat(
        id: impl Into<String>,
        features: Vec<f64>,
        n_dims: usize,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyDataset);
        }
        if n_dims == 0 {
            return Err(Error::InvalidDataset("samples have no features".into()));
        }
        if features.len() != labels.len() * n_dims {
            return Err(Error::InvalidDataset(format!(
                "{} feature values do not fill {} rows of {n_dims}",
                features.len(),
                labels.len()
            )));
        }
        if let Some(i) = features.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidDataset(format!(
                "non-finite value at row {}, column {}",
                i / n_dims,
                i % n_dims
            )));
        }
        if class_names.is_empty() {
            return Err(Error::InvalidDataset("no class names".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::InvalidDataset(format!(
                "label {bad} has no class name"
            )));
        }
        Ok(Self {
            id: id.into(),
            features,
            n_dims,
            labels,
            class_names,
            dim_names: None,
        })
    }

    pub fn with_dim_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.n_dims {
            return Err(Error::InvalidDataset(format!(
                "{} dimension names for {} dimensions",
                names.len(),
                self.n_dims
            )));
        }
        self.dim_names = Some(names);
        Ok(self)
    }

    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn n_samples(&self) -> usize {
        self.labels.len()
    }

    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.n_dims)
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn dim_names(&self) -> Option<&[String]> {
        self.dim_names.as_deref()
    }

    /// Name of dimension `i`, falling back to `x{i}`.
    pub fn dim_name(&self, i: usize) -> String {
        self.dim_names
            .as_ref()
            .map_or_else(|| format!("x{i}"), |names| names[i].clone())
    }

    /// Samples per class, indexed by encoded label.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// The rows at `indices`, in that order. The label alphabet is kept whole
    /// so encodings agree between a dataset and its subsets.
    pub fn subset(&self, indices: &[usize]) -> Self {
        let mut features = Vec::with_capacity(indices.len() * self.n_dims);
        for &i in indices {
            features.extend_from_slice(self.row(i));
        }
        Self {
            id: self.id.clone(),
            features,
            n_dims: self.n_dims,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_names: self.class_names.clone(),
            dim_names: self.dim_names.clone(),
        }
    }

    /// Same labels and metadata, new feature values (must keep the shape).
    pub fn with_features(&self, features: Vec<f64>) -> Result<Self> {
        let mut out = Self::from_flat(
            self.id.clone(),
            features,
            self.n_dims,
            self.labels.clone(),
            self.class_names.clone(),
        )?;
        out.dim_names = self.dim_names.clone();
        Ok(out)
    }

    /// Writes the dataset as CSV with a header; the label column is last and
    /// named `label_name`.
    pub fn write_csv<W: Write>(&self, out: W, label_name: &str) -> Result<()> {
        let path = Path::new("<output>");
        let csv_err = |e: csv::Error| Error::Csv {
            path: path.to_path_buf(),
            message: e.to_string(),
        };
        let mut writer = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
        let mut header: Vec<String> = (0..self.n_dims).map(|i| self.dim_name(i)).collect();
        header.push(label_name.to_string());
        writer.write_record(&header).map_err(csv_err)?;
        let mut record = Vec::with_capacity(self.n_dims + 1);
        for (row, &label) in self.rows().zip(&self.labels) {
            record.clear();
            record.extend(row.iter().map(|v| v.to_string()));
            record.push(self.class_names[label].clone());
            writer.write_record(&record).map_err(csv_err)?;
        }
        writer.flush().map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, label_name: &str) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        self.write_csv(std::io::BufWriter::new(file), label_name)
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
    Last,
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s {
            "last" => LabelColumn::Last,
            _ => s
                .parse::<usize>()
                .map_or_else(|_| LabelColumn::Name(s.to_string()), LabelColumn::Index),
        })
    }
}

impl std::fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LabelColumn::Name(n) => f.write_str(n),
            LabelColumn::Index(i) => write!(f, "{i}"),
            LabelColumn::Last => f.write_str("last"),
        }
    }
}

/// Loads a labeled dataset from a CSV file. The dataset id is the file stem.
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn, has_header: bool) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let id = path
        .file_stem()
        .map_or_else(|| "dataset".to_string(), |s| s.to_string_lossy().into_owned());
    read_csv(file, path, id, label, has_header)
}

pub fn read_csv<R: std::io::Read>(
    input: R,
    path: &Path,
    id: String,
    label: &LabelColumn,
    has_header: bool,
) -> Result<LabeledDataset> {
    let csv_err = |message: String| Error::Csv {
        path: path.to_path_buf(),
        message,
    };
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut records = reader.records();
    let mut header: Option<Vec<String>> = None;
    if has_header {
        match records.next() {
            Some(rec) => {
                let rec = rec.map_err(|e| csv_err(e.to_string()))?;
                let names: Vec<String> = rec.iter().map(str::to_string).collect();
                let mut seen = HashSet::new();
                if let Some(dup) = names.iter().find(|n| !seen.insert(n.as_str())) {
                    return Err(csv_err(format!("duplicate header name {dup:?}")));
                }
                header = Some(names);
            }
            None => return Err(Error::EmptyDataset),
        }
    }

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut raw_labels: Vec<String> = Vec::new();
    let mut width = header.as_ref().map(Vec::len);
    let mut label_idx: Option<usize> = None;

    for (r, rec) in records.enumerate() {
        // 1-based physical line number for messages
        let line = r + 1 + usize::from(has_header);
        let rec = rec.map_err(|e| match e.kind() {
            csv::ErrorKind::UnequalLengths { expected_len, len, .. } => csv_err(format!(
                "ragged row at line {line}: {len} fields, expected {expected_len}"
            )),
            _ => csv_err(e.to_string()),
        })?;
        let w = *width.get_or_insert(rec.len());
        if rec.len() != w {
            return Err(csv_err(format!(
                "ragged row at line {line}: {} fields, expected {w}",
                rec.len()
            )));
        }
        let li = match label_idx {
            Some(i) => i,
            None => {
                let i = resolve_label_column(label, header.as_deref(), w).map_err(csv_err)?;
                label_idx = Some(i);
                i
            }
        };
        let mut row = Vec::with_capacity(w - 1);
        for (c, cell) in rec.iter().enumerate() {
            if c == li {
                if cell.is_empty() {
                    return Err(Error::Parse {
                        path: path.to_path_buf(),
                        row: line,
                        column: c,
                        message: "missing label".into(),
                    });
                }
                raw_labels.push(cell.to_string());
                continue;
            }
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                path: path.to_path_buf(),
                row: line,
                column: c,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    row: line,
                    column: c,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            row.push(value);
        }
        rows.push(row);
    }

    if rows.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let li = label_idx.expect("set with the first row");
    if rows[0].is_empty() {
        return Err(csv_err("no feature columns besides the label".into()));
    }

    let names: BTreeMap<&str, usize> = raw_labels.iter().map(|s| (s.as_str(), 0)).collect();
    let class_names: Vec<String> = names.keys().map(|s| s.to_string()).collect();
    let index: BTreeMap<&str, usize> = class_names
        .iter()
        .enumerate()
        .map(|(i, s)| (s.as_str(), i))
        .collect();
    let labels: Vec<usize> = raw_labels.iter().map(|s| index[s.as_str()]).collect();

    let dataset = LabeledDataset::new(id, rows, labels, class_names)?;
    match header {
        Some(mut names) => {
            names.remove(li);
            dataset.with_dim_names(names)
        }
        None => Ok(dataset),
    }
}

fn resolve_label_column(
    label: &LabelColumn,
    header: Option<&[String]>,
    width: usize,
) -> std::result::Result<usize, String> {
    let idx = match label {
        LabelColumn::Last => width.checked_sub(1).ok_or("empty record")?,
        LabelColumn::Index(i) => *i,
        LabelColumn::Name(name) => {
            let header = header.ok_or_else(|| {
                format!("label column {name:?} given by name but the file has no header")
            })?;
            header
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| format!("no column named {name:?}"))?
        }
    };
    if idx >= width {
        return Err(format!("label column {idx} out of range for {width} columns"));
    }
    Ok(idx)
}

/// Two Gaussian classes in the plane with per-axis spreads, class means at
/// `(∓separation/2, 0)`. Classes are named `A` and `B`; columns `x`, `y`.
pub fn synthetic_two_class(
    n_per_class: usize,
    x_spread: f64,
    y_spread: f64,
    separation: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n_per_class == 0 {
        return Err(Error::InvalidParameter("n_per_class must be ≥ 1".into()));
    }
    for (name, v) in [("x_spread", x_spread), ("y_spread", y_spread)] {
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")));
        }
    }
    if !separation.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "separation must be finite, got {separation}"
        )));
    }
    let mut rng = SeededRng::new(seed);
    let mut rows = Vec::with_capacity(2 * n_per_class);
    let mut labels = Vec::with_capacity(2 * n_per_class);
    for class in 0..2 {
        let cx = if class == 0 { -separation / 2.0 } else { separation / 2.0 };
        for _ in 0..n_per_class {
            let x = rng.normal(cx, x_spread);
            let y = rng.normal(0.0, y_spread);
            rows.push(vec![x, y]);
            labels.push(class);
        }
    }
    LabeledDataset::new("two_class", rows, labels, vec!["A".into(), "B".into()])?
        .with_dim_names(vec!["x".into(), "y".into()])
}

/// Default class-mean shift on informative dimensions, in noise standard
/// deviations.
pub const GENE_LIKE_SHIFT: f64 = 1.5;

/// A two-class, high-dimension/low-sample dataset. All dimensions carry
/// N(0, 1) noise; the first `n_informative` dimensions are shifted by
/// [`GENE_LIKE_SHIFT`] for class `1`. Classes alternate by row so they stay
/// balanced.
pub fn synthetic_gene_like(
    n_samples: usize,
    n_dims: usize,
    n_informative: usize,
    seed: u64,
) -> Result<LabeledDataset> {
    synthetic_gene_like_with_shift(n_samples, n_dims, n_informative, GENE_LIKE_SHIFT, seed)
}

pub fn synthetic_gene_like_with_shift(
    n_samples: usize,
    n_dims: usize,
    n_informative: usize,
    shift: f64,
    seed: u64,
) -> Result<LabeledDataset> {
    if n_samples < 4 {
        return Err(Error::InvalidParameter("n_samples must be ≥ 4".into()));
    }
    if n_dims == 0 {
        return Err(Error::InvalidParameter("n_dims must be ≥ 1".into()));
    }
    if n_informative > n_dims {
        return Err(Error::InvalidParameter(format!(
            "n_informative ({n_informative}) exceeds n_dims ({n_dims})"
        )));
    }
    if !shift.is_finite() {
        return Err(Error::InvalidParameter("shift must be finite".into()));
    }
    let mut rng = SeededRng::new(seed);
    let mut features = Vec::with_capacity(n_samples * n_dims);
    let mut labels = Vec::with_capacity(n_samples);
    for s in 0..n_samples {
        let class = s % 2;
        for d in 0..n_dims {
            let mean = if class == 1 && d < n_informative { shift } else { 0.0 };
            features.push(rng.normal(mean, 1.0));
        }
        labels.push(class);
    }
    let names = (0..n_dims).map(|d| format!("g{d}")).collect();
    LabeledDataset::from_flat("gene_like", features, n_dims, labels, vec!["0".into(), "1".into()])?
        .with_dim_names(names)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PreprocessSpec {
    pub standardize: bool,
}

/// Per-dimension affine map `(v − shift) · factor` fitted on a row subset.
/// A zero `factor` marks a zero-variance dimension (mapped to zeros, not
/// invertible there).
#[derive(Debug, Clone, PartialEq)]
pub struct FittedTransform {
    pub shift: Vec<f64>,
    pub factor: Vec<f64>,
}

impl FittedTransform {
    pub fn identity(n_dims: usize) -> Self {
        Self {
            shift: vec![0.0; n_dims],
            factor: vec![1.0; n_dims],
        }
    }

    pub fn apply_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.shift.iter().zip(&self.factor))
            .map(|(v, (s, f))| (v - s) * f)
            .collect()
    }

    /// Inverse map; zero-variance dimensions come back as their fitted mean.
    pub fn invert_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.shift.iter().zip(&self.factor))
            .map(|(v, (s, f))| if *f == 0.0 { *s } else { v / f + s })
            .collect()
    }

    pub fn apply(&self, data: &LabeledDataset) -> Result<LabeledDataset> {
        if data.n_dims() != self.shift.len() {
            return Err(Error::DimensionMismatch {
                left: self.shift.len(),
                right: data.n_dims(),
            });
        }
        let features = data.rows().flat_map(|r| self.apply_row(r)).collect();
        data.with_features(features)
    }
}

/// Fits `spec` on `fit_rows` and applies it to every row of `data`.
pub fn preprocess(
    data: &LabeledDataset,
    spec: PreprocessSpec,
    fit_rows: &[usize],
) -> Result<(LabeledDataset, FittedTransform)> {
    if fit_rows.is_empty() {
        return Err(Error::InvalidParameter("preprocessing fit set is empty".into()));
    }
    let transform = fit_transform(data, spec, fit_rows)?;
    Ok((transform.apply(data)?, transform))
}

pub fn fit_transform(data: &LabeledDataset, spec: PreprocessSpec, fit_rows: &[usize]) -> Result<FittedTransform> {
    if fit_rows.is_empty() {
        return Err(Error::InvalidParameter("preprocessing fit set is empty".into()));
    }
    let n = data.n_dims();
    if !spec.standardize {
        return Ok(FittedTransform::identity(n));
    }
    let count = fit_rows.len() as f64;
    let mut mean = vec![0.0; n];
    for &r in fit_rows {
        for (m, v) in mean.iter_mut().zip(data.row(r)) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= count);
    let mut var = vec![0.0; n];
    for &r in fit_rows {
        for ((acc, v), m) in var.iter_mut().zip(data.row(r)).zip(&mean) {
            *acc += (v - m) * (v - m);
        }
    }
    let factor = var
        .iter()
        .map(|v| {
            let sd = (v / count).sqrt();
            if sd > 0.0 { 1.0 / sd } else { 0.0 }
        })
        .collect();
    Ok(FittedTransform { shift: mean, factor })
}
