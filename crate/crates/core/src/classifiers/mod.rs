//! The five evaluation classifiers behind one train/score interface.
//!
//! Every scorer ranks: a higher score means "more likely class 1". Scores
//! are vote fractions (knn), logits (ann), signed margins (svm), mean leaf
//! probabilities (rf) or log-odds (gbc).

mod ann;
mod forest;
mod gbc;
mod knn;
mod svm;
pub mod tree;

use std::fmt;

use serde::{Deserialize, Serialize};

pub use ann::{Ann, AnnParams};
pub use forest::{ForestParams, RandomForest};
pub use gbc::{GbcParams, GradientBoosting};
pub use knn::{Knn, KnnParams};
pub use svm::{LinearSvm, SvmParams};

use crate::nn::{Matrix, NnError};
use crate::rng::SeededRng;

#[derive(Debug, thiserror::Error)]
pub enum ClassifierError {
    #[error("rejected input: {0}")]
    Rejected(String),
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ClassifierKind {
    Knn(KnnParams),
    Ann(AnnParams),
    Svm(SvmParams),
    Rf(ForestParams),
    Gbc(GbcParams),
}

impl ClassifierKind {
    pub const NAMES: [&'static str; 5] = ["ann", "svm", "knn", "rf", "gbc"];

    pub fn name(&self) -> &'static str {
        match self {
            ClassifierKind::Knn(_) => "knn",
            ClassifierKind::Ann(_) => "ann",
            ClassifierKind::Svm(_) => "svm",
            ClassifierKind::Rf(_) => "rf",
            ClassifierKind::Gbc(_) => "gbc",
        }
    }

    /// Default parameters for a classifier name.
    pub fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "knn" => ClassifierKind::Knn(KnnParams::default()),
            "ann" => ClassifierKind::Ann(AnnParams::default()),
            "svm" => ClassifierKind::Svm(SvmParams::default()),
            "rf" => ClassifierKind::Rf(ForestParams::default()),
            "gbc" => ClassifierKind::Gbc(GbcParams::default()),
            _ => return None,
        })
    }

    /// All five with default parameters, in the order ann, svm, knn, rf, gbc.
    pub fn all_defaults() -> Vec<Self> {
        Self::NAMES.iter().map(|n| Self::from_name(n).unwrap()).collect()
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum Model {
    Knn(Knn),
    Ann(Ann),
    Svm(LinearSvm),
    Rf(RandomForest),
    Gbc(GradientBoosting),
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainedClassifier {
    pub kind: ClassifierKind,
    pub model: Model,
    pub n_features: usize,
}

pub fn train(kind: &ClassifierKind, x: &Matrix, y: &[u8], seed: u64) -> Result<TrainedClassifier, ClassifierError> {
    if x.rows() != y.len() {
        return Err(ClassifierError::Rejected(format!(
            "{} rows but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() < 2 {
        return Err(ClassifierError::Rejected("need at least 2 training rows".into()));
    }
    if y.iter().any(|&l| l > 1) {
        return Err(ClassifierError::Rejected("labels must be 0 or 1".into()));
    }
    let pos = y.iter().filter(|&&l| l == 1).count();
    if pos == 0 || pos == y.len() {
        return Err(ClassifierError::Rejected("training labels contain a single class".into()));
    }
    let mut rng = SeededRng::new(seed);
    let model = match kind {
        ClassifierKind::Knn(p) => Model::Knn(Knn::fit(x, y, p)),
        ClassifierKind::Ann(p) => Model::Ann(Ann::fit(x, y, p, &mut rng)?),
        ClassifierKind::Svm(p) => Model::Svm(LinearSvm::fit(x, y, p, &mut rng)),
        ClassifierKind::Rf(p) => Model::Rf(RandomForest::fit(x, y, p, &mut rng)),
        ClassifierKind::Gbc(p) => Model::Gbc(GradientBoosting::fit(x, y, p, &mut rng)),
    };
    Ok(TrainedClassifier {
        kind: *kind,
        model,
        n_features: x.cols(),
    })
}

impl TrainedClassifier {
    pub fn score_batch(&self, x: &Matrix) -> Result<Vec<f64>, ClassifierError> {
        if x.cols() != self.n_features {
            return Err(ClassifierError::Rejected(format!(
                "model trained on {} features, got {}",
                self.n_features,
                x.cols()
            )));
        }
        let per_row = |f: &dyn Fn(&[f64]) -> f64| x.row_iter().map(f).collect::<Vec<f64>>();
        Ok(match &self.model {
            Model::Knn(m) => per_row(&|r| m.score(r)),
            Model::Ann(m) => m.scores(x)?,
            Model::Svm(m) => per_row(&|r| m.score(r)),
            Model::Rf(m) => per_row(&|r| m.score(r)),
            Model::Gbc(m) => per_row(&|r| m.score(r)),
        })
    }
}

#[cfg(test)]
mod tests;
