use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use sha2::{Digest, Sha256};

use super::report::fmt6;
use super::{auc, hex16, stratified_folds, EvalError, ExperimentConfig, FoldPlan};
use crate::arch::{ArchSpec, RelativeDelta};
use crate::classifiers::{self, ClassifierKind};
use crate::data::Dataset;
use crate::gan::{self, TrainConfig};
use crate::nn::Matrix;
use crate::rng::derive_seed;
use crate::smote::{smote, SmoteParams};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Augmenter {
    None,
    Smote,
    Gan,
    Wgan,
    Iwgan,
    Mwgan,
    Swgan,
    RIwgan(RelativeDelta),
}

impl Augmenter {
    /// The eight augmenters of the standard grid.
    pub fn grid_default() -> Vec<Augmenter> {
        vec![
            Augmenter::None,
            Augmenter::Smote,
            Augmenter::Gan,
            Augmenter::Wgan,
            Augmenter::Iwgan,
            Augmenter::Mwgan,
            Augmenter::Swgan,
            Augmenter::RIwgan(RelativeDelta::variant(1).expect("variant 1 exists")),
        ]
    }

    /// All accepted names, for error messages.
    pub fn valid_names() -> Vec<String> {
        let mut v: Vec<String> = ["none", "smote", "gan", "wgan", "iwgan", "mwgan", "swgan"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        v.extend((1..=6).map(|i| format!("r_iwgan_{i}")));
        v
    }

    pub fn name(&self) -> String {
        match self {
            Augmenter::None => "none".into(),
            Augmenter::Smote => "smote".into(),
            Augmenter::Gan => "gan".into(),
            Augmenter::Wgan => "wgan".into(),
            Augmenter::Iwgan => "iwgan".into(),
            Augmenter::Mwgan => "mwgan".into(),
            Augmenter::Swgan => "swgan".into(),
            Augmenter::RIwgan(d) => format!("r_iwgan_{}", d.variant_index()),
        }
    }

    /// True for the structurally constrained WGANs compared against `wgan`.
    pub fn is_constrained(&self) -> bool {
        matches!(self, Augmenter::Iwgan | Augmenter::Mwgan | Augmenter::Swgan)
    }

    /// Generator/critic pair for GAN-based augmenters.
    pub fn spec(&self, data_dim: usize, cfg: &ExperimentConfig) -> Result<Option<ArchSpec>, EvalError> {
        let h = &cfg.hidden;
        let spec = match self {
            Augmenter::None | Augmenter::Smote => return Ok(None),
            Augmenter::Gan | Augmenter::Wgan => {
                ArchSpec::unconstrained(data_dim, data_dim, h, &cfg.reference_critic_hidden)?
            }
            Augmenter::Iwgan => ArchSpec::isomorphic(data_dim, h)?,
            Augmenter::Mwgan => ArchSpec::mirror(data_dim, h)?,
            Augmenter::Swgan => ArchSpec::self_symmetric(data_dim, h)?,
            Augmenter::RIwgan(d) => ArchSpec::relative_isomorphic(data_dim, h, *d)?,
        };
        Ok(Some(spec))
    }

    fn train_config(&self, cfg: &ExperimentConfig) -> TrainConfig {
        match self {
            Augmenter::Gan => cfg.gan.clone(),
            _ => cfg.wgan.clone(),
        }
    }
}

impl fmt::Display for Augmenter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

impl FromStr for Augmenter {
    type Err = EvalError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let a = match s {
            "none" => Augmenter::None,
            "smote" => Augmenter::Smote,
            "gan" => Augmenter::Gan,
            "wgan" => Augmenter::Wgan,
            "iwgan" => Augmenter::Iwgan,
            "mwgan" => Augmenter::Mwgan,
            "swgan" => Augmenter::Swgan,
            _ => {
                let variant = s
                    .strip_prefix("r_iwgan_")
                    .and_then(|i| i.parse::<usize>().ok())
                    .and_then(|i| RelativeDelta::variant(i).ok());
                match variant {
                    Some(d) => Augmenter::RIwgan(d),
                    None => {
                        return Err(EvalError::Rejected(format!(
                            "unknown method '{s}'; valid methods: {}",
                            Augmenter::valid_names().join(", ")
                        )))
                    }
                }
            }
        };
        Ok(a)
    }
}

impl Serialize for Augmenter {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.name())
    }
}

impl<'de> Deserialize<'de> for Augmenter {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Generates `n_needed` synthetic rows resembling `minority`.
///
/// GAN batches shrink to the minority row count when it is smaller than the
/// configured batch size.
pub fn augment(
    augmenter: &Augmenter,
    minority: &Matrix,
    n_needed: usize,
    cfg: &ExperimentConfig,
    seed: u64,
) -> Result<Matrix, EvalError> {
    if n_needed == 0 || *augmenter == Augmenter::None {
        return Ok(Matrix::with_cols(minority.cols()));
    }
    if *augmenter == Augmenter::Smote {
        let k = cfg.smote_k.min(minority.rows().saturating_sub(1)).max(1);
        return Ok(smote(minority, n_needed, SmoteParams { k, seed })?);
    }
    let spec = augmenter
        .spec(minority.cols(), cfg)?
        .expect("GAN augmenters have a spec");
    let mut tc = augmenter.train_config(cfg);
    tc.seed = derive_seed(seed, &["train"]);
    tc.batch_size = tc.batch_size.min(minority.rows());
    let (model, _) = gan::train(minority, &spec, &tc)?;
    Ok(gan::sample(&model, n_needed, derive_seed(seed, &["sample"]))?)
}

/// Order-independent digest of a matrix's rows.
pub fn row_multiset_digest(x: &Matrix) -> String {
    let mut rows: Vec<Vec<u8>> = x
        .row_iter()
        .map(|r| r.iter().flat_map(|v| v.to_le_bytes()).collect())
        .collect();
    rows.sort();
    let mut h = Sha256::new();
    for r in &rows {
        h.update(r);
    }
    hex16(&h.finalize())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldDetail {
    pub fold: usize,
    pub auc: f64,
    pub n_train: usize,
    pub n_synthetic: usize,
    /// [`row_multiset_digest`] of the rows actually scored.
    pub test_digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellResult {
    pub dataset: String,
    pub augmenter: Augmenter,
    pub classifier: String,
    pub folds: Vec<FoldDetail>,
    /// Diagnostic of the first failing fold; such cells carry no folds.
    pub failure: Option<String>,
}

impl CellResult {
    pub fn fold_aucs(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.auc).collect()
    }

    /// Mean of fold AUCs; `None` for failed cells.
    pub fn mean_auc(&self) -> Option<f64> {
        if self.failure.is_some() || self.folds.is_empty() {
            return None;
        }
        Some(self.folds.iter().map(|f| f.auc).sum::<f64>() / self.folds.len() as f64)
    }

    /// Mean of the fold AUCs as printed in grid.csv (six decimals), so that
    /// comparisons can be recomputed from the CSV alone.
    pub fn reported_mean_auc(&self) -> Option<f64> {
        self.mean_auc()?;
        let sum: f64 = self
            .folds
            .iter()
            .map(|f| fmt6(f.auc).parse::<f64>().expect("formatted float parses"))
            .sum();
        Some(sum / self.folds.len() as f64)
    }

    /// Sample standard deviation of fold AUCs.
    pub fn std_auc(&self) -> Option<f64> {
        let m = self.mean_auc()?;
        let n = self.folds.len();
        if n < 2 {
            return Some(0.0);
        }
        let ss: f64 = self.folds.iter().map(|f| (f.auc - m) * (f.auc - m)).sum();
        Some((ss / (n - 1) as f64).sqrt())
    }
}

/// The fold plan every augmenter shares for `ds` under `cfg`.
pub fn fold_plan(ds: &Dataset, cfg: &ExperimentConfig) -> Result<FoldPlan, EvalError> {
    stratified_folds(&ds.y, cfg.folds, derive_seed(cfg.seed, &[&ds.name, "folds"]))
}

/// One fold for one augmenter, scored by every classifier in `kinds`.
///
/// The synthetic rows depend on (seed, dataset, augmenter, fold) and the
/// classifier seed on (seed, dataset, classifier, fold), so all classifiers
/// see the same augmented set and all augmenters the same classifier seed.
fn run_fold(
    ds: &Dataset,
    augmenter: &Augmenter,
    kinds: &[ClassifierKind],
    plan: &FoldPlan,
    fold: usize,
    cfg: &ExperimentConfig,
) -> Vec<Result<FoldDetail, String>> {
    let fold_tag = fold.to_string();
    let train_rows = plan.train_rows(fold);
    let test_rows = plan.test_rows(fold);
    let x_test = ds.x.select_rows(&test_rows);
    let y_test: Vec<u8> = test_rows.iter().map(|&i| ds.y[i]).collect();
    let mut x_train = ds.x.select_rows(&train_rows);
    let mut y_train: Vec<u8> = train_rows.iter().map(|&i| ds.y[i]).collect();

    let minority_rows: Vec<usize> = train_rows
        .iter()
        .copied()
        .filter(|&i| ds.y[i] == ds.minority_label)
        .collect();
    let n_min = minority_rows.len();
    let n_maj = train_rows.len() - n_min;
    let n_needed = n_maj.saturating_sub(n_min);
    let aug_seed = derive_seed(cfg.seed, &[&ds.name, &augmenter.name(), "fold", &fold_tag, "augment"]);
    let synthetic = match augment(augmenter, &ds.x.select_rows(&minority_rows), n_needed, cfg, aug_seed) {
        Ok(s) => s,
        Err(e) => {
            let msg = format!("{} fold {fold}: {e}", augmenter.name());
            return kinds.iter().map(|_| Err(msg.clone())).collect();
        }
    };
    let n_synthetic = synthetic.rows();
    // synthetic rows only ever join the training split
    x_train = x_train.vstack(&synthetic).expect("synthetic rows share the feature count");
    y_train.extend(std::iter::repeat(ds.minority_label).take(n_synthetic));
    let test_digest = row_multiset_digest(&x_test);

    kinds
        .iter()
        .map(|kind| {
            let seed = derive_seed(cfg.seed, &[&ds.name, kind.name(), "fold", &fold_tag]);
            let model = classifiers::train(kind, &x_train, &y_train, seed)
                .map_err(|e| format!("{} fold {fold}: {e}", kind.name()))?;
            let scores = model
                .score_batch(&x_test)
                .map_err(|e| format!("{} fold {fold}: {e}", kind.name()))?;
            let a = auc(&scores, &y_test).map_err(|e| format!("{} fold {fold}: {e}", kind.name()))?;
            Ok(FoldDetail {
                fold,
                auc: a,
                n_train: x_train.rows(),
                n_synthetic,
                test_digest: test_digest.clone(),
            })
        })
        .collect()
}

fn assemble(
    ds: &Dataset,
    augmenter: Augmenter,
    kind: &ClassifierKind,
    folds: Vec<Result<FoldDetail, String>>,
) -> CellResult {
    let mut cell = CellResult {
        dataset: ds.name.clone(),
        augmenter,
        classifier: kind.name().to_string(),
        folds: Vec::new(),
        failure: None,
    };
    for f in folds {
        match f {
            Ok(d) => cell.folds.push(d),
            Err(e) => {
                cell.failure = Some(e);
                cell.folds.clear();
                break;
            }
        }
    }
    cell
}

fn check_plan(ds: &Dataset, plan: &FoldPlan) -> Result<(), EvalError> {
    if plan.assignment.len() != ds.rows() {
        return Err(EvalError::Rejected(format!(
            "fold plan covers {} rows but {} has {}",
            plan.assignment.len(),
            ds.name,
            ds.rows()
        )));
    }
    Ok(())
}

/// Cross-validated AUC of one (augmenter, classifier) pair on `ds`.
pub fn run_cell(
    ds: &Dataset,
    augmenter: &Augmenter,
    classifier: &ClassifierKind,
    plan: &FoldPlan,
    cfg: &ExperimentConfig,
) -> Result<CellResult, EvalError> {
    check_plan(ds, plan)?;
    cfg.validate()?;
    let folds = (0..plan.k)
        .into_par_iter()
        .map(|f| run_fold(ds, augmenter, std::slice::from_ref(classifier), plan, f, cfg).remove(0))
        .collect();
    Ok(assemble(ds, *augmenter, classifier, folds))
}

/// Cells for every augmenter and classifier on one dataset, ordered by
/// augmenter then classifier.
pub(crate) fn run_block(
    ds: &Dataset,
    plan: &FoldPlan,
    augmenters: &[Augmenter],
    classifiers: &[ClassifierKind],
    cfg: &ExperimentConfig,
) -> Vec<CellResult> {
    let tasks: Vec<(usize, usize)> = (0..augmenters.len())
        .flat_map(|a| (0..plan.k).map(move |f| (a, f)))
        .collect();
    let results: Vec<Vec<Result<FoldDetail, String>>> = tasks
        .par_iter()
        .map(|&(a, f)| run_fold(ds, &augmenters[a], classifiers, plan, f, cfg))
        .collect();
    let mut cells = Vec::new();
    let mut it = results.into_iter();
    for aug in augmenters {
        let per_fold: Vec<Vec<Result<FoldDetail, String>>> = it.by_ref().take(plan.k).collect();
        for (c, kind) in classifiers.iter().enumerate() {
            let folds = per_fold.iter().map(|r| r[c].clone()).collect();
            cells.push(assemble(ds, *aug, kind, folds));
        }
    }
    cells
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ExperimentGrid {
    pub config: ExperimentConfig,
    /// Ordered by dataset, augmenter, classifier as passed to [`run_grid`].
    pub cells: Vec<CellResult>,
    pub datasets: Vec<String>,
    pub augmenters: Vec<Augmenter>,
    pub classifiers: Vec<String>,
}

/// Runs every (dataset, augmenter, classifier) cell. Each dataset has one
/// fold plan shared by all of its cells.
pub fn run_grid(
    datasets: &[Dataset],
    augmenters: &[Augmenter],
    classifiers: &[ClassifierKind],
    cfg: &ExperimentConfig,
) -> Result<ExperimentGrid, EvalError> {
    cfg.validate()?;
    let mut cells = Vec::new();
    for ds in datasets {
        let plan = fold_plan(ds, cfg)?;
        cells.extend(run_block(ds, &plan, augmenters, classifiers, cfg));
    }
    Ok(ExperimentGrid {
        config: cfg.clone(),
        cells,
        datasets: datasets.iter().map(|d| d.name.clone()).collect(),
        augmenters: augmenters.to_vec(),
        classifiers: classifiers.iter().map(|k| k.name().to_string()).collect(),
    })
}

/// Comparison for one (dataset, classifier) group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupSummary {
    pub dataset: String,
    pub classifier: String,
    pub wgan_auc: Option<f64>,
    /// Highest-scoring constrained WGAN (ties to the earlier augmenter).
    pub best_constrained: Option<(Augmenter, f64)>,
    /// Highest-scoring non-`none` augmenter (ties to the earlier augmenter).
    pub best_augmenter: Option<(Augmenter, f64)>,
    /// Some constrained WGAN beats `wgan`; `None` when not comparable.
    pub improved: Option<bool>,
    /// `iwgan` beats every other non-`none` augmenter; `None` when `iwgan` failed or is absent.
    pub iwgan_best: Option<bool>,
    pub failed_cells: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub groups: Vec<GroupSummary>,
    pub improved: usize,
    pub improved_of: usize,
    pub iwgan_best: usize,
    pub iwgan_best_of: usize,
    pub failed_cells: usize,
}

fn argmax(cands: impl Iterator<Item = (Augmenter, f64)>) -> Option<(Augmenter, f64)> {
    let mut best: Option<(Augmenter, f64)> = None;
    for (a, v) in cands {
        if best.map_or(true, |(_, b)| v > b) {
            best = Some((a, v));
        }
    }
    best
}

impl ExperimentGrid {
    pub fn cell(&self, dataset: &str, augmenter: &Augmenter, classifier: &str) -> Option<&CellResult> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.augmenter == *augmenter && c.classifier == classifier)
    }

    /// Win counts over (dataset, classifier) groups, comparing mean fold AUC
    /// at reported precision.
    /// Failed cells take no part in any comparison.
    pub fn summary(&self) -> GridSummary {
        let mut groups = Vec::new();
        for ds in &self.datasets {
            for clf in &self.classifiers {
                let cells: Vec<&CellResult> = self
                    .cells
                    .iter()
                    .filter(|c| &c.dataset == ds && &c.classifier == clf)
                    .collect();
                let means: Vec<(Augmenter, f64)> = cells
                    .iter()
                    .filter_map(|c| c.reported_mean_auc().map(|m| (c.augmenter, m)))
                    .collect();
                let mean_of = |a: Augmenter| means.iter().find(|(x, _)| *x == a).map(|(_, m)| *m);
                let wgan_auc = mean_of(Augmenter::Wgan);
                let best_constrained = argmax(means.iter().copied().filter(|(a, _)| a.is_constrained()));
                let best_augmenter = argmax(means.iter().copied().filter(|(a, _)| *a != Augmenter::None));
                let improved = match (wgan_auc, best_constrained) {
                    (Some(w), Some((_, c))) => Some(c > w),
                    _ => None,
                };
                let iwgan_best = mean_of(Augmenter::Iwgan).map(|iw| {
                    means
                        .iter()
                        .filter(|(a, _)| *a != Augmenter::None && *a != Augmenter::Iwgan)
                        .all(|(_, m)| iw > *m)
                });
                let failed_cells = cells
                    .iter()
                    .filter(|c| c.failure.is_some())
                    .map(|c| c.augmenter.name())
                    .collect();
                groups.push(GroupSummary {
                    dataset: ds.clone(),
                    classifier: clf.clone(),
                    wgan_auc,
                    best_constrained,
                    best_augmenter,
                    improved,
                    iwgan_best,
                    failed_cells,
                });
            }
        }
        GridSummary {
            improved: groups.iter().filter(|g| g.improved == Some(true)).count(),
            improved_of: groups.iter().filter(|g| g.improved.is_some()).count(),
            iwgan_best: groups.iter().filter(|g| g.iwgan_best == Some(true)).count(),
            iwgan_best_of: groups.iter().filter(|g| g.iwgan_best.is_some()).count(),
            failed_cells: self.cells.iter().filter(|c| c.failure.is_some()).count(),
            groups,
        }
    }
}
