//! Dataset loading, min-max normalization and the registry of the four
//! benchmark files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::nn::Matrix;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}: line {line}, column {column}: {detail}")]
    Parse {
        file: String,
        line: usize,
        column: usize,
        detail: String,
    },
    #[error("{name}: expected {expected} {what}, found {found}")]
    Count {
        name: String,
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("{0}")]
    Invalid(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Delimiter {
    Comma,
    Whitespace,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelColumn {
    First,
    Last,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub name: String,
    /// Canonical file name inside the data directory.
    pub file_name: String,
    pub expected_rows: Option<usize>,
    pub expected_features: Option<usize>,
    pub delimiter: Delimiter,
    pub label_column: LabelColumn,
    /// Raw label text mapped to class 1; every other label maps to 0.
    pub positive_label: String,
    /// Known difference between the file and the published attribute count.
    pub caveat: Option<String>,
}

impl DatasetDescriptor {
    /// Comma- or whitespace-delimited file with the label in the last column
    /// and `1` as the positive class. Counts are not verified.
    pub fn generic(path: &Path) -> Self {
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "dataset".into());
        Self {
            name,
            file_name: path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default(),
            expected_rows: None,
            expected_features: None,
            delimiter: Delimiter::Comma,
            label_column: LabelColumn::Last,
            positive_label: "1".into(),
            caveat: None,
        }
    }

    pub fn has_caveat(&self) -> bool {
        self.caveat.is_some()
    }
}

/// The four benchmark datasets (instances × attributes): Australian 690×14,
/// German 1000×20 (24 in the numeric encoding), Pima 768×8, SPECT 267×22.
pub fn registry() -> Vec<DatasetDescriptor> {
    vec![
        DatasetDescriptor {
            name: "australian".into(),
            file_name: "australian.dat".into(),
            expected_rows: Some(690),
            expected_features: Some(14),
            delimiter: Delimiter::Whitespace,
            label_column: LabelColumn::Last,
            positive_label: "1".into(),
            caveat: None,
        },
        DatasetDescriptor {
            name: "german".into(),
            file_name: "german.data-numeric".into(),
            expected_rows: Some(1000),
            expected_features: Some(24),
            delimiter: Delimiter::Whitespace,
            label_column: LabelColumn::Last,
            // 1 = good, 2 = bad credit risk
            positive_label: "2".into(),
            caveat: Some(
                "20 raw attributes; the numeric encoding used here expands them to 24 columns".into(),
            ),
        },
        DatasetDescriptor {
            name: "pima".into(),
            file_name: "pima-indians-diabetes.data".into(),
            expected_rows: Some(768),
            expected_features: Some(8),
            delimiter: Delimiter::Comma,
            label_column: LabelColumn::Last,
            positive_label: "1".into(),
            caveat: None,
        },
        DatasetDescriptor {
            name: "spect".into(),
            file_name: "SPECT.data".into(),
            expected_rows: Some(267),
            expected_features: Some(22),
            delimiter: Delimiter::Comma,
            label_column: LabelColumn::First,
            positive_label: "1".into(),
            caveat: Some("SPECT.train and SPECT.test concatenated (80 + 187 rows)".into()),
        },
    ]
}

pub fn descriptor(name: &str) -> Option<DatasetDescriptor> {
    registry().into_iter().find(|d| d.name == name)
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub name: String,
    /// Features, each column min-max normalized to `[0, 1]`.
    pub x: Matrix,
    pub y: Vec<u8>,
    pub feature_names: Vec<String>,
    pub minority_label: u8,
    /// First 16 hex digits of the SHA-256 of the source bytes.
    pub fingerprint: String,
}

/// Column-wise min-max scaling; constant columns map to 0.
pub fn normalize(x: &Matrix) -> Matrix {
    let mut out = x.clone();
    for j in 0..x.cols() {
        let col = x.column(j);
        let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for i in 0..x.rows() {
            out[(i, j)] = if span > 0.0 { (x[(i, j)] - lo) / span } else { 0.0 };
        }
    }
    out
}

impl Dataset {
    /// Builds a dataset from already-normalized features.
    pub fn new(name: impl Into<String>, x: Matrix, y: Vec<u8>) -> Result<Self, DataError> {
        let name = name.into();
        if x.rows() != y.len() {
            return Err(DataError::Invalid(format!(
                "{name}: {} feature rows but {} labels",
                x.rows(),
                y.len()
            )));
        }
        if let Some(v) = x.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DataError::Invalid(format!("{name}: feature value {v} outside [0, 1]")));
        }
        if y.iter().any(|&l| l > 1) {
            return Err(DataError::Invalid(format!("{name}: labels must be 0 or 1")));
        }
        let pos = y.iter().filter(|&&l| l == 1).count();
        let neg = y.len() - pos;
        if pos == 0 || neg == 0 {
            return Err(DataError::Invalid(format!("{name}: both classes must be present")));
        }
        let minority_label = if neg < pos { 0 } else { 1 };
        let mut hasher = Sha256::new();
        for v in x.as_slice() {
            hasher.update(v.to_le_bytes());
        }
        hasher.update(&y);
        let fingerprint = hex16(&hasher.finalize());
        let feature_names = (1..=x.cols()).map(|i| format!("A{i}")).collect();
        Ok(Self {
            name,
            x,
            y,
            feature_names,
            minority_label,
            fingerprint,
        })
    }

    /// Normalizes raw features, then builds the dataset.
    pub fn from_raw(name: impl Into<String>, raw: &Matrix, y: Vec<u8>) -> Result<Self, DataError> {
        Self::new(name, normalize(raw), y)
    }

    pub fn rows(&self) -> usize {
        self.x.rows()
    }

    pub fn features(&self) -> usize {
        self.x.cols()
    }

    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.y.iter().filter(|&&l| l == 1).count();
        (self.y.len() - pos, pos)
    }
}

fn hex16(bytes: &[u8]) -> String {
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}

/// `(minority rows, majority rows)`.
pub fn split_by_class(ds: &Dataset) -> (Matrix, Matrix) {
    let mut minority = Matrix::with_cols(ds.features());
    let mut majority = Matrix::with_cols(ds.features());
    for (row, &label) in ds.x.row_iter().zip(&ds.y) {
        if label == ds.minority_label {
            minority.push_row(row);
        } else {
            majority.push_row(row);
        }
    }
    (minority, majority)
}

/// Parses delimited text per `desc` (without normalizing or checking counts).
pub fn parse_delimited(desc: &DatasetDescriptor, text: &str) -> Result<(Matrix, Vec<u8>), DataError> {
    let mut raw: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<String> = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = match desc.delimiter {
            Delimiter::Comma => line.split(',').map(str::trim).collect(),
            Delimiter::Whitespace => line.split_whitespace().collect(),
        };
        if fields.len() < 2 {
            return Err(DataError::Parse {
                file: desc.file_name.clone(),
                line: ln + 1,
                column: 1,
                detail: "expected a label and at least one feature".into(),
            });
        }
        let (label, feats, offset) = match desc.label_column {
            LabelColumn::First => (fields[0], &fields[1..], 2),
            LabelColumn::Last => (fields[fields.len() - 1], &fields[..fields.len() - 1], 1),
        };
        let mut row = Vec::with_capacity(feats.len());
        for (j, f) in feats.iter().enumerate() {
            let v: f64 = f.parse().map_err(|_| DataError::Parse {
                file: desc.file_name.clone(),
                line: ln + 1,
                column: j + offset,
                detail: format!("cannot parse `{f}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(DataError::Parse {
                    file: desc.file_name.clone(),
                    line: ln + 1,
                    column: j + offset,
                    detail: format!("non-finite value `{f}`"),
                });
            }
            row.push(v);
        }
        if let Some(first) = raw.first() {
            if first.len() != row.len() {
                return Err(DataError::Parse {
                    file: desc.file_name.clone(),
                    line: ln + 1,
                    column: row.len() + 1,
                    detail: format!("{} features, earlier rows have {}", row.len(), first.len()),
                });
            }
        }
        raw.push(row);
        labels.push(label.to_string());
    }
    let mut distinct: Vec<&String> = labels.iter().collect();
    distinct.sort();
    distinct.dedup();
    if distinct.len() > 2 {
        return Err(DataError::Invalid(format!(
            "{}: more than two class labels: {distinct:?}",
            desc.name
        )));
    }
    let y = labels.iter().map(|l| u8::from(*l == desc.positive_label)).collect();
    let x = Matrix::from_rows(&raw).map_err(|e| DataError::Invalid(e.to_string()))?;
    Ok((x, y))
}

/// Loads, normalizes and verifies a dataset file.
pub fn load_dataset(desc: &DatasetDescriptor, path: &Path) -> Result<Dataset, DataError> {
    let bytes = std::fs::read(path).map_err(|source| DataError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let text = String::from_utf8_lossy(&bytes);
    let (raw, y) = parse_delimited(desc, &text)?;
    if let Some(expected) = desc.expected_rows {
        if raw.rows() != expected {
            return Err(DataError::Count {
                name: desc.name.clone(),
                what: "rows",
                expected,
                found: raw.rows(),
            });
        }
    }
    if let Some(expected) = desc.expected_features {
        if raw.cols() != expected {
            return Err(DataError::Count {
                name: desc.name.clone(),
                what: "features",
                expected,
                found: raw.cols(),
            });
        }
    }
    let mut ds = Dataset::from_raw(desc.name.clone(), &raw, y)?;
    ds.fingerprint = hex16(&Sha256::digest(&bytes));
    Ok(ds)
}

/// Loads a registry dataset from `data_dir`.
pub fn load_registered(name: &str, data_dir: &Path) -> Result<Dataset, DataError> {
    let desc = descriptor(name).ok_or_else(|| {
        DataError::Invalid(format!(
            "unknown dataset `{name}` (registry: australian, german, pima, spect)"
        ))
    })?;
    load_dataset(&desc, &data_dir.join(&desc.file_name))
}
