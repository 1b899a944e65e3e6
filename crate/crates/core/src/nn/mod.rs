//! Dense feed-forward networks: matrices, forward/backward passes,
//! optimizers and weight clipping.

mod gradcheck;
mod matrix;
mod mlp;
mod optim;

pub use gradcheck::{gradient_check, gradient_check_with, kink_margin, random_case, GradCheckReport, Loss, FD_STEP};
pub use matrix::Matrix;
pub use mlp::{sigmoid, softplus, Activation, ActivationStack, Gradients, MlpParams};
pub use optim::{OptimizerConfig, OptimizerKind, OptimizerState};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
}
