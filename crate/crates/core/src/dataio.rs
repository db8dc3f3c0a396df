//! Datasets: CSV ingestion, train/validation splitting and synthetic generators.
//!
//! The CSV schema is a header row naming the feature columns plus one column
//! called `label`, followed by one example per row. Labels may be any string;
//! they are mapped to dense class ids in order of first appearance.

use std::io::{Read, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: feature {column:?} is not a finite number: {value:?}")]
    NonNumeric {
        line: u64,
        column: String,
        value: String,
    },
    #[error("header has no `label` column")]
    MissingLabel,
    #[error("header has no feature columns")]
    NoFeatures,
    #[error("dataset has no rows")]
    Empty,
    #[error("dataset needs at least two classes, found {0}")]
    TooFewClasses(usize),
    #[error("invalid dataset: {0}")]
    Invalid(String),
    #[error("cannot split: {0}")]
    Split(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, DataError>;

/// Labeled examples stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    name: String,
    feature_names: Vec<String>,
    class_names: Vec<String>,
    features: Vec<f64>,
    labels: Vec<usize>,
}

impl Dataset {
    pub fn new(
        name: impl Into<String>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
        features: Vec<f64>,
        labels: Vec<usize>,
    ) -> Result<Self> {
        let dim = feature_names.len();
        if dim == 0 {
            return Err(DataError::NoFeatures);
        }
        if class_names.len() < 2 {
            return Err(DataError::TooFewClasses(class_names.len()));
        }
        if features.len() != labels.len() * dim {
            return Err(DataError::Invalid(format!(
                "{} feature values for {} rows of {dim} features",
                features.len(),
                labels.len()
            )));
        }
        if let Some(v) = features.iter().find(|v| !v.is_finite()) {
            return Err(DataError::Invalid(format!("non-finite feature value {v}")));
        }
        if let Some(&l) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(DataError::Invalid(format!(
                "label {l} outside [0, {})",
                class_names.len()
            )));
        }
        Ok(Self {
            name: name.into(),
            feature_names,
            class_names,
            features,
            labels,
        })
    }

    /// Builds a dataset with generated column names (`f1..fk`) and class
    /// names (`0..c-1`).
    pub fn from_rows(
        name: impl Into<String>,
        rows: &[Vec<f64>],
        labels: Vec<usize>,
        num_classes: usize,
    ) -> Result<Self> {
        let dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != dim) {
            return Err(DataError::Invalid("rows have different lengths".into()));
        }
        if rows.len() != labels.len() {
            return Err(DataError::Invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        Self::new(
            name,
            (1..=dim).map(|i| format!("f{i}")).collect(),
            (0..num_classes).map(|c| c.to_string()).collect(),
            rows.concat(),
            labels,
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn num_features(&self) -> usize {
        self.feature_names.len()
    }

    pub fn num_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    /// Original label strings, indexed by class id.
    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.num_features();
        &self.features[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.features.chunks_exact(self.num_features())
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Rows at `indices`, in the given order. Class names are kept.
    pub fn subset(&self, indices: &[usize], name: impl Into<String>) -> Dataset {
        let mut features = Vec::with_capacity(indices.len() * self.num_features());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            labels.push(self.labels[i]);
        }
        Dataset {
            name: name.into(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
            features,
            labels,
        }
    }

    pub fn with_features(&self, features: Vec<f64>) -> Dataset {
        assert_eq!(features.len(), self.features.len());
        Dataset {
            features,
            ..self.clone()
        }
    }
}

/// Reads a CSV dataset. The dataset name is the file stem.
pub fn load_csv(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let name = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    read_csv(file, name)
}

pub fn read_csv<R: Read>(reader: R, name: impl Into<String>) -> Result<Dataset> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = rdr.headers()?.clone();
    let label_col = header
        .iter()
        .position(|h| h == "label")
        .ok_or(DataError::MissingLabel)?;
    let feature_names: Vec<String> = header
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_col)
        .map(|(_, h)| h.to_string())
        .collect();
    if feature_names.is_empty() {
        return Err(DataError::NoFeatures);
    }

    let mut class_names: Vec<String> = Vec::new();
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line());
            DataError::Malformed {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != header.len() {
            return Err(DataError::Malformed {
                line,
                message: format!("expected {} fields, found {}", header.len(), record.len()),
            });
        }
        for (i, field) in record.iter().enumerate() {
            if i == label_col {
                let id = match class_names.iter().position(|c| c == field) {
                    Some(id) => id,
                    None => {
                        class_names.push(field.to_string());
                        class_names.len() - 1
                    }
                };
                labels.push(id);
            } else {
                let v: f64 = field
                    .parse()
                    .ok()
                    .filter(|v: &f64| v.is_finite())
                    .ok_or_else(|| DataError::NonNumeric {
                        line,
                        column: header[i].to_string(),
                        value: field.to_string(),
                    })?;
                features.push(v);
            }
        }
    }
    if labels.is_empty() {
        return Err(DataError::Empty);
    }
    Dataset::new(name, feature_names, class_names, features, labels)
}

/// Writes the dataset in the schema [`read_csv`] accepts.
pub fn write_csv<W: Write>(dataset: &Dataset, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<&str> = dataset.feature_names.iter().map(String::as_str).collect();
    header.push("label");
    w.write_record(&header)?;
    for (row, &label) in dataset.rows().zip(&dataset.labels) {
        let mut fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
        fields.push(dataset.class_names[label].clone());
        w.write_record(&fields)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|source| DataError::Io {
        path: path.display().to_string(),
        source,
    })?;
    write_csv(dataset, std::io::BufWriter::new(file))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub seed: u64,
    pub stratified: bool,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.1,
            seed: 0,
            stratified: true,
        }
    }
}

/// Index partition produced by [`split_indices`]; both parts ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Chooses `round(fraction·N)` training rows. With stratification each class
/// contributes its proportional share (largest-remainder rounding) and at
/// least one row.
pub fn split_indices(ds: &Dataset, spec: &SplitSpec) -> Result<SplitIndices> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(DataError::Split(format!(
            "train fraction {} outside (0, 1)",
            spec.train_fraction
        )));
    }
    let n = ds.len();
    let train_size = (spec.train_fraction * n as f64).round() as usize;
    if train_size == 0 || train_size >= n {
        return Err(DataError::Split(format!(
            "{n} rows with train fraction {} leave an empty part",
            spec.train_fraction
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut train = if spec.stratified {
        stratified_pick(ds, spec.train_fraction, train_size, &mut rng)?
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all.truncate(train_size);
        all
    };
    train.sort_unstable();
    let mut in_train = vec![false; n];
    train.iter().for_each(|&i| in_train[i] = true);
    let validation = (0..n).filter(|&i| !in_train[i]).collect();
    Ok(SplitIndices { train, validation })
}

fn stratified_pick(
    ds: &Dataset,
    fraction: f64,
    train_size: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let counts = ds.class_counts();
    let present: Vec<usize> = (0..counts.len()).filter(|&c| counts[c] > 0).collect();
    if train_size < present.len() {
        return Err(DataError::Split(format!(
            "a training split of {train_size} rows cannot hold all {} classes",
            present.len()
        )));
    }
    let exact: Vec<f64> = counts.iter().map(|&c| c as f64 * fraction).collect();
    let mut quota: Vec<usize> = exact.iter().map(|q| q.floor() as usize).collect();
    let mut remaining = train_size - quota.iter().sum::<usize>();
    let mut order: Vec<usize> = present.clone();
    // largest fractional remainder first, ties to the lower class id
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &c in order.iter().cycle() {
        if remaining == 0 {
            break;
        }
        if quota[c] < counts[c] {
            quota[c] += 1;
            remaining -= 1;
        }
    }
    for &c in &present {
        if quota[c] == 0 {
            let donor = (0..quota.len())
                .filter(|&d| quota[d] > 1)
                .max_by_key(|&d| (quota[d], std::cmp::Reverse(d)))
                .ok_or_else(|| DataError::Split(format!("class {c} cannot be represented")))?;
            quota[donor] -= 1;
            quota[c] = 1;
        }
    }
    let mut picked = Vec::with_capacity(train_size);
    for &c in &present {
        let mut members: Vec<usize> = (0..ds.len()).filter(|&i| ds.labels[i] == c).collect();
        members.shuffle(rng);
        picked.extend_from_slice(&members[..quota[c]]);
    }
    Ok(picked)
}

/// Splits into (train, validation). Both parts keep the original row order.
pub fn split(ds: &Dataset, spec: &SplitSpec) -> Result<(Dataset, Dataset)> {
    let idx = split_indices(ds, spec)?;
    Ok((
        ds.subset(&idx.train, format!("{}-train", ds.name)),
        ds.subset(&idx.validation, format!("{}-validation", ds.name)),
    ))
}

/// Per-feature affine rescaling to zero mean and unit variance.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Statistics of `ds`. Constant features get a scale of 1.
    pub fn fit(ds: &Dataset) -> Self {
        let d = ds.num_features();
        let n = ds.len().max(1) as f64;
        let mut mean = vec![0.0; d];
        for row in ds.rows() {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; d];
        for row in ds.rows() {
            for ((s, v), m) in var.iter_mut().zip(row).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 1e-12 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    pub fn transform_into(&self, x: &[f64], out: &mut [f64]) {
        for (((o, v), m), s) in out.iter_mut().zip(x).zip(&self.mean).zip(&self.std) {
            *o = (v - m) / s;
        }
    }

    pub fn transform(&self, ds: &Dataset) -> Dataset {
        let mut features = ds.features.clone();
        for row in features.chunks_exact_mut(ds.num_features()) {
            let src = row.to_vec();
            self.transform_into(&src, row);
        }
        ds.with_features(features)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SyntheticKind {
    Xor,
    TwoGaussians,
    Rings,
}

impl SyntheticKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            SyntheticKind::Xor => "xor",
            SyntheticKind::TwoGaussians => "two_gaussians",
            SyntheticKind::Rings => "rings",
        }
    }
}

impl std::str::FromStr for SyntheticKind {
    type Err = DataError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "xor" => Ok(SyntheticKind::Xor),
            "two_gaussians" => Ok(SyntheticKind::TwoGaussians),
            "rings" => Ok(SyntheticKind::Rings),
            other => Err(DataError::Invalid(format!("unknown synthetic kind {other:?}"))),
        }
    }
}

/// Centers of the four XOR clusters and their labels.
pub const XOR_CORNERS: [([f64; 2], usize); 4] = [
    ([-1.0, -1.0], 0),
    ([-1.0, 1.0], 1),
    ([1.0, -1.0], 1),
    ([1.0, 1.0], 0),
];

/// Two-dimensional labeled dataset with balanced classes.
///
/// * `xor`: Gaussian blobs around the corners `(±1, ±1)`, labeled by the
///   XOR of the coordinate signs.
/// * `two_gaussians`: blobs around `(-1, 0)` and `(1, 0)`.
/// * `rings`: radius 1 (class 0) and radius 2 (class 1), radial noise.
///
/// `noise` is the Gaussian standard deviation. Example `i` belongs to
/// cluster `i mod k`, so class counts differ by at most one.
pub fn make_synthetic(kind: SyntheticKind, n: usize, noise: f64, seed: u64) -> Result<Dataset> {
    if n < 8 {
        return Err(DataError::Invalid(format!("synthetic datasets need n >= 8, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(DataError::Invalid(format!("noise must be finite and >= 0, got {noise}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let gauss = Normal::new(0.0, noise).expect("noise validated above");
    let mut rows = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let (point, label) = match kind {
            SyntheticKind::Xor => {
                let ([cx, cy], label) = XOR_CORNERS[i % 4];
                (
                    vec![cx + gauss.sample(&mut rng), cy + gauss.sample(&mut rng)],
                    label,
                )
            }
            SyntheticKind::TwoGaussians => {
                let label = i % 2;
                let cx = if label == 0 { -1.0 } else { 1.0 };
                (
                    vec![cx + gauss.sample(&mut rng), gauss.sample(&mut rng)],
                    label,
                )
            }
            SyntheticKind::Rings => {
                let label = i % 2;
                let radius = (label + 1) as f64 + gauss.sample(&mut rng);
                let angle = rng.random_range(0.0..std::f64::consts::TAU);
                (vec![radius * angle.cos(), radius * angle.sin()], label)
            }
        };
        rows.push(point);
        labels.push(label);
    }
    let name = format!("{}(n={n},noise={noise},seed={seed})", kind.as_str());
    Dataset::new(
        name,
        vec!["x1".into(), "x2".into()],
        vec!["0".into(), "1".into()],
        rows.concat(),
        labels,
    )
}
