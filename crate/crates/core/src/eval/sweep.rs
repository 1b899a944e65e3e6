use serde::{Deserialize, Serialize};

use super::grid::run_block;
use super::{fold_plan, spearman, Augmenter, CellResult, EvalError, ExperimentConfig};
use crate::arch::RelativeDelta;
use crate::classifiers::ClassifierKind;
use crate::data::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    /// `None` is the exactly isomorphic reference.
    pub delta: Option<RelativeDelta>,
    pub classifier: String,
    pub cell: CellResult,
}

impl SweepEntry {
    pub fn delta_fraction(&self) -> f64 {
        self.delta.map_or(0.0, |d| d.fraction())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub dataset: String,
    /// Sorted by |delta|, then delta, then classifier order.
    pub entries: Vec<SweepEntry>,
    /// Spearman correlation of |delta| against mean AUC, per classifier,
    /// over non-failed entries. NaN when undefined.
    pub trend: Vec<(String, f64)>,
}

/// Cross-validated AUC of r-IWGAN for each delta, plus the isomorphic
/// reference, on a shared fold plan.
pub fn relative_iso_sweep(
    ds: &Dataset,
    classifiers: &[ClassifierKind],
    deltas: &[RelativeDelta],
    cfg: &ExperimentConfig,
) -> Result<SweepTable, EvalError> {
    cfg.validate()?;
    let mut ds_sorted: Vec<RelativeDelta> = deltas.to_vec();
    ds_sorted.sort_by_key(|d| (d.percent().abs(), d.percent()));
    ds_sorted.dedup();
    let mut augmenters = vec![Augmenter::Iwgan];
    augmenters.extend(ds_sorted.iter().map(|&d| Augmenter::RIwgan(d)));

    let plan = fold_plan(ds, cfg)?;
    let cells = run_block(ds, &plan, &augmenters, classifiers, cfg);
    let entries: Vec<SweepEntry> = cells
        .into_iter()
        .map(|cell| SweepEntry {
            delta: match cell.augmenter {
                Augmenter::RIwgan(d) => Some(d),
                _ => None,
            },
            classifier: cell.classifier.clone(),
            cell,
        })
        .collect();
    let trend = classifiers
        .iter()
        .map(|k| {
            let (abs_d, aucs): (Vec<f64>, Vec<f64>) = entries
                .iter()
                .filter(|e| e.classifier == k.name())
                .filter_map(|e| e.cell.mean_auc().map(|m| (e.delta_fraction().abs(), m)))
                .unzip();
            let rho = if abs_d.len() < 2 { f64::NAN } else { spearman(&abs_d, &aucs) };
            (k.name().to_string(), rho)
        })
        .collect();
    Ok(SweepTable {
        dataset: ds.name.clone(),
        entries,
        trend,
    })
}
