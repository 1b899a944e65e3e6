//! Cross-validated augmentation experiments and their CSV reports.

mod auc;
mod convergence;
mod folds;
mod grid;
pub mod report;
mod sweep;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub use auc::{auc, average_ranks, spearman};
pub use convergence::{convergence_compare, ConvergenceResult};
pub use folds::{stratified_folds, FoldPlan};
pub use grid::{
    augment, fold_plan, row_multiset_digest, run_cell, run_grid, Augmenter, CellResult,
    ExperimentGrid, FoldDetail, GridSummary, GroupSummary,
};
pub use sweep::{relative_iso_sweep, SweepEntry, SweepTable};

use crate::arch::ArchError;
use crate::classifiers::ClassifierError;
use crate::gan::{GanError, TrainConfig};
use crate::smote::SmoteError;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("rejected input: {0}")]
    Rejected(String),
    #[error(transparent)]
    Gan(#[from] GanError),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error(transparent)]
    Smote(#[from] SmoteError),
    #[error(transparent)]
    Classifier(#[from] ClassifierError),
}

/// Everything that determines experiment outputs besides the data.
///
/// The `seed` fields inside `wgan` and `gan` are ignored; per-run seeds are
/// derived from `seed` and the run's position in the grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub seed: u64,
    pub folds: usize,
    /// Generator hidden widths shared by every constrained variant.
    pub hidden: Vec<usize>,
    /// Critic hidden widths of the unconstrained GAN/WGAN reference.
    pub reference_critic_hidden: Vec<usize>,
    pub smote_k: usize,
    pub wgan: TrainConfig,
    pub gan: TrainConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            folds: 10,
            hidden: vec![64, 32],
            reference_critic_hidden: vec![48, 24],
            smote_k: 5,
            wgan: TrainConfig::wgan(),
            gan: TrainConfig::gan(),
        }
    }
}

impl ExperimentConfig {
    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// First 16 hex digits of the SHA-256 of the compact JSON form.
    pub fn fingerprint(&self) -> String {
        hex16(&Sha256::digest(self.to_json().as_bytes()))
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        if self.folds < 2 {
            return Err(EvalError::Rejected(format!("folds = {} must be >= 2", self.folds)));
        }
        if self.smote_k < 1 {
            return Err(EvalError::Rejected("smote_k must be >= 1".into()));
        }
        self.wgan.validate()?;
        self.gan.validate()?;
        Ok(())
    }
}

pub(crate) fn hex16(bytes: &[u8]) -> String {
    bytes[..8].iter().map(|b| format!("{b:02x}")).collect()
}
