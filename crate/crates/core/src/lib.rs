//! Tabular minority-class augmentation with structurally constrained WGANs,
//! SMOTE, five baseline classifiers and a cross-validated evaluation grid.

pub mod arch;
pub mod classifiers;
pub mod data;
pub mod eval;
pub mod gan;
pub mod nn;
pub mod rng;
pub mod smote;

/// Any failure surfaced by the library, tagged with its module.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("nn: {0}")]
    Nn(#[from] nn::NnError),
    #[error("arch: {0}")]
    Arch(#[from] arch::ArchError),
    #[error("gan: {0}")]
    Gan(#[from] gan::GanError),
    #[error("smote: {0}")]
    Smote(#[from] smote::SmoteError),
    #[error("classifiers: {0}")]
    Classifier(#[from] classifiers::ClassifierError),
    #[error("eval: {0}")]
    Eval(#[from] eval::EvalError),
    #[error("data: {0}")]
    Data(#[from] data::DataError),
}
