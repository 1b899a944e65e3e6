use serde::{Deserialize, Serialize};

use super::{EvalError, ExperimentConfig};
use crate::arch::ArchSpec;
use crate::data::{split_by_class, Dataset};
use crate::gan::{train_partial, LossTrace};
use crate::rng::derive_seed;

/// Paired WGAN and IWGAN training traces on one dataset's minority rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceResult {
    pub dataset: String,
    pub iterations: usize,
    pub wgan: LossTrace,
    pub iwgan: LossTrace,
    /// Set when a run stopped early; its trace ends at the failure.
    pub wgan_failure: Option<String>,
    pub iwgan_failure: Option<String>,
}

impl ConvergenceResult {
    /// `|iwgan gen_loss| / |wgan gen_loss|` at iteration 0.
    pub fn initial_ratio(&self) -> Option<f64> {
        let w = self.wgan.records.first()?.gen_loss;
        let i = self.iwgan.records.first()?.gen_loss;
        Some(i.abs() / w.abs())
    }
}

/// Trains the unconstrained reference and the isomorphic pair with the same
/// config and seed, so the traces differ only through architecture.
pub fn convergence_compare(ds: &Dataset, cfg: &ExperimentConfig) -> Result<ConvergenceResult, EvalError> {
    cfg.validate()?;
    let (minority, _) = split_by_class(ds);
    let d = ds.features();
    let reference = ArchSpec::unconstrained(d, d, &cfg.hidden, &cfg.reference_critic_hidden)?;
    let iso = ArchSpec::isomorphic(d, &cfg.hidden)?;
    let mut tc = cfg.wgan.clone();
    tc.seed = derive_seed(cfg.seed, &[&ds.name, "convergence"]);
    tc.batch_size = tc.batch_size.min(minority.rows());

    let (w, wgan) = train_partial(&minority, &reference, &tc);
    let (i, iwgan) = train_partial(&minority, &iso, &tc);
    Ok(ConvergenceResult {
        dataset: ds.name.clone(),
        iterations: tc.iterations,
        wgan,
        iwgan,
        wgan_failure: w.err().map(|e| e.to_string()),
        iwgan_failure: i.err().map(|e| e.to_string()),
    })
}
