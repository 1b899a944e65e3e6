//! Cross-validation harness: leakage, pairing, balancing and summaries.

use std::collections::BTreeMap;

use tabaug_core::arch::RelativeDelta;
use tabaug_core::classifiers::ClassifierKind;
use tabaug_core::data::Dataset;
use tabaug_core::eval::{
    self, convergence_compare, fold_plan, relative_iso_sweep, report, row_multiset_digest, run_cell, run_grid,
    Augmenter, ExperimentConfig,
};
use tabaug_core::nn::Matrix;
use tabaug_core::rng::SeededRng;

fn quick_cfg() -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.folds = 5;
    c.wgan.iterations = 10;
    c.gan.iterations = 10;
    c
}

/// Two classes separated along the first feature; positives are `pos_frac` of rows.
fn separable(n: usize, d: usize, pos_frac: f64, seed: u64) -> Dataset {
    let mut rng = SeededRng::new(seed);
    let n_pos = (n as f64 * pos_frac) as usize;
    let mut x = Matrix::with_cols(d);
    let mut y = Vec::new();
    for i in 0..n {
        let label = (i < n_pos) as u8;
        let mut row: Vec<f64> = (0..d).map(|_| rng.uniform()).collect();
        row[0] = if label == 1 { 0.6 + 0.4 * rng.uniform() } else { 0.4 * rng.uniform() };
        x.push_row(&row);
        y.push(label);
    }
    Dataset::new("separable", x, y).unwrap()
}

fn svm() -> ClassifierKind {
    ClassifierKind::from_name("svm").unwrap()
}

#[test]
fn separable_data_without_augmentation() {
    let ds = separable(200, 4, 0.3, 1);
    let cfg = quick_cfg();
    let plan = fold_plan(&ds, &cfg).unwrap();
    let cell = run_cell(&ds, &Augmenter::None, &svm(), &plan, &cfg).unwrap();
    assert!(cell.failure.is_none());
    assert_eq!(cell.folds.len(), 5);
    assert!(cell.mean_auc().unwrap() > 0.99);
}

#[test]
fn scored_rows_are_exactly_the_fold_rows() {
    let ds = separable(150, 3, 0.25, 2);
    let cfg = quick_cfg();
    let plan = fold_plan(&ds, &cfg).unwrap();
    for aug in [Augmenter::Smote, Augmenter::Iwgan] {
        let cell = run_cell(&ds, &aug, &svm(), &plan, &cfg).unwrap();
        assert!(cell.failure.is_none(), "{:?}", cell.failure);
        for f in &cell.folds {
            let rows = plan.test_rows(f.fold);
            assert_eq!(f.test_digest, row_multiset_digest(&ds.x.select_rows(&rows)));
            // training split balanced 1:1 after augmentation
            let train = plan.train_rows(f.fold);
            let pos = train.iter().filter(|&&i| ds.y[i] == 1).count();
            let neg = train.len() - pos;
            assert_eq!(f.n_synthetic, neg - pos);
            assert_eq!(f.n_train, 2 * neg);
        }
    }
}

#[test]
fn balanced_data_needs_no_synthesis() {
    let ds = separable(100, 3, 0.5, 3);
    let cfg = quick_cfg();
    let plan = fold_plan(&ds, &cfg).unwrap();
    let rf = ClassifierKind::from_name("rf").unwrap();
    let none = run_cell(&ds, &Augmenter::None, &rf, &plan, &cfg).unwrap();
    for aug in [Augmenter::Smote, Augmenter::Wgan, Augmenter::Gan] {
        let cell = run_cell(&ds, &aug, &rf, &plan, &cfg).unwrap();
        assert!(cell.folds.iter().all(|f| f.n_synthetic == 0));
        assert_eq!(cell.fold_aucs(), none.fold_aucs(), "{aug}");
    }
}

#[test]
fn mismatched_plan_is_rejected() {
    let ds = separable(100, 3, 0.3, 4);
    let other = separable(80, 3, 0.3, 4);
    let cfg = quick_cfg();
    let plan = fold_plan(&other, &cfg).unwrap();
    assert!(run_cell(&ds, &Augmenter::None, &svm(), &plan, &cfg).is_err());
}

#[test]
fn one_cell_grid() {
    let ds = separable(100, 3, 0.3, 5);
    let g = run_grid(&[ds], &[Augmenter::None], &[svm()], &quick_cfg()).unwrap();
    assert_eq!(g.cells.len(), 1);
    let s = g.summary();
    assert_eq!(s.groups.len(), 1);
    assert_eq!((s.improved_of, s.iwgan_best_of), (0, 0));
}

#[test]
fn diverged_augmenter_fails_only_its_cells() {
    let ds = separable(120, 3, 0.3, 6);
    let mut cfg = quick_cfg();
    cfg.gan.learning_rate = 1e9;
    cfg.gan.iterations = 200;
    let augs = [Augmenter::None, Augmenter::Gan, Augmenter::Smote];
    let g = run_grid(&[ds], &augs, &[svm()], &cfg).unwrap();
    let failed: Vec<String> = g.cells.iter().filter(|c| c.failure.is_some()).map(|c| c.augmenter.name()).collect();
    assert_eq!(failed, vec!["gan"]);
    assert!(g.cells[0].mean_auc().is_some() && g.cells[2].mean_auc().is_some());
    let csv = report::grid_csv(&g);
    assert_eq!(csv.lines().filter(|l| l.contains(",gan,") && l.ends_with("NaN")).count(), 5);
    let s = g.summary();
    assert_eq!(s.failed_cells, 1);
    assert!(report::summary_csv(&g, &s).contains("# failed_cells=1"));
}

#[test]
fn grid_is_paired_deterministic_and_summarized() {
    let a = separable(120, 3, 0.3, 7);
    let b = separable(90, 4, 0.35, 8);
    let b = Dataset::new("other", b.x, b.y).unwrap();
    let cfg = quick_cfg();
    let augs = [Augmenter::None, Augmenter::Wgan, Augmenter::Iwgan, Augmenter::Mwgan];
    let kinds = [svm(), ClassifierKind::from_name("knn").unwrap()];
    let g = run_grid(&[a.clone(), b.clone()], &augs, &kinds, &cfg).unwrap();
    assert_eq!(g.cells.len(), 2 * 4 * 2);
    assert_eq!(report::grid_csv(&g), report::grid_csv(&run_grid(&[a.clone(), b], &augs, &kinds, &cfg).unwrap()));

    // every augmenter saw the same test folds
    let digests = |c: &eval::CellResult| c.folds.iter().map(|f| f.test_digest.clone()).collect::<Vec<_>>();
    let first = digests(&g.cells[0]);
    for c in g.cells.iter().filter(|c| c.dataset == "separable") {
        assert_eq!(digests(c), first);
    }

    // recount from per-cell means
    let s = g.summary();
    let mut improved = 0;
    let mut best = 0;
    for ds in ["separable", "other"] {
        for k in ["svm", "knn"] {
            let m: BTreeMap<String, f64> = g
                .cells
                .iter()
                .filter(|c| c.dataset == ds && c.classifier == k)
                .map(|c| (c.augmenter.name(), c.reported_mean_auc().unwrap()))
                .collect();
            if m["iwgan"] > m["wgan"] || m["mwgan"] > m["wgan"] {
                improved += 1;
            }
            if m["iwgan"] > m["wgan"] && m["iwgan"] > m["mwgan"] {
                best += 1;
            }
        }
    }
    assert_eq!((s.improved, s.improved_of, s.iwgan_best, s.iwgan_best_of), (improved, 4, best, 4));
}

#[test]
fn convergence_traces_align() {
    let ds = separable(200, 5, 0.4, 9);
    let mut cfg = quick_cfg();
    cfg.wgan.iterations = 25;
    let r = convergence_compare(&ds, &cfg).unwrap();
    assert_eq!((r.wgan.len(), r.iwgan.len()), (25, 25));
    assert!(r.wgan_failure.is_none() && r.iwgan_failure.is_none());
    assert!(r.initial_ratio().unwrap().is_finite());
    let csv = report::convergence_csv(&r, &cfg);
    assert!(csv.starts_with("# tabaug convergence dataset=separable fingerprint="));
    assert_eq!(csv.lines().filter(|l| !l.starts_with('#')).count(), 26);
}

#[test]
fn sweep_orders_deltas_and_reports_trend() {
    let ds = separable(120, 3, 0.3, 10);
    let cfg = quick_cfg();
    let t = relative_iso_sweep(&ds, &[svm()], &RelativeDelta::all(), &cfg).unwrap();
    let deltas: Vec<i32> = t.entries.iter().map(|e| e.delta.map_or(0, |d| d.percent())).collect();
    assert_eq!(deltas, vec![0, -10, 10, -20, 20, -30, 30]);
    assert_eq!(t.trend.len(), 1);
    let (abs_d, aucs): (Vec<f64>, Vec<f64>) =
        t.entries.iter().map(|e| (e.delta_fraction().abs(), e.cell.mean_auc().unwrap())).unzip();
    let rho = t.trend[0].1;
    let oracle = eval::spearman(&abs_d, &aucs);
    assert!(rho.to_bits() == oracle.to_bits() || (rho - oracle).abs() < 1e-12);
}

#[test]
fn augmenter_names_round_trip() {
    for name in Augmenter::valid_names() {
        let a: Augmenter = name.parse().unwrap();
        assert_eq!(a.name(), name);
    }
    let err = "frobnicate".parse::<Augmenter>().unwrap_err().to_string();
    assert!(err.contains("r_iwgan_6") && err.contains("smote"));
    assert_eq!(Augmenter::grid_default().len(), 8);
}

#[test]
fn config_fingerprint_tracks_settings() {
    let a = ExperimentConfig::default();
    let mut b = a.clone();
    assert_eq!(a.fingerprint(), b.fingerprint());
    b.wgan.iterations += 1;
    assert_ne!(a.fingerprint(), b.fingerprint());
    assert_eq!(a.fingerprint().len(), 16);
}
