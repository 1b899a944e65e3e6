//! CSV renderings. Every artifact opens with a `#` line carrying the config
//! fingerprint and the config itself; floats use six decimals.

use std::fmt::Write;

use super::{ConvergenceResult, ExperimentConfig, ExperimentGrid, GridSummary, SweepTable};

pub fn fmt6(v: f64) -> String {
    if v.is_nan() {
        "NaN".into()
    } else {
        format!("{v:.6}")
    }
}

fn opt6(v: Option<f64>) -> String {
    v.map_or_else(|| "NaN".into(), fmt6)
}

fn verdict(v: Option<bool>) -> &'static str {
    match v {
        Some(true) => "yes",
        Some(false) => "no",
        None => "excluded",
    }
}

pub fn header(artifact: &str, cfg: &ExperimentConfig) -> String {
    format!(
        "# tabaug {artifact} fingerprint={} config={}\n",
        cfg.fingerprint(),
        cfg.to_json()
    )
}

/// One row per (cell, fold). Failed cells print NaN for every fold.
pub fn grid_csv(grid: &ExperimentGrid) -> String {
    let mut out = header("grid", &grid.config);
    out.push_str("dataset,augmenter,classifier,fold,auc\n");
    for c in &grid.cells {
        if c.failure.is_some() {
            for f in 0..grid.config.folds {
                let _ = writeln!(out, "{},{},{},{f},NaN", c.dataset, c.augmenter, c.classifier);
            }
        } else {
            for f in &c.folds {
                let _ = writeln!(
                    out,
                    "{},{},{},{},{}",
                    c.dataset,
                    c.augmenter,
                    c.classifier,
                    f.fold,
                    fmt6(f.auc)
                );
            }
        }
    }
    out
}

pub fn summary_csv(grid: &ExperimentGrid, s: &GridSummary) -> String {
    let mut out = header("summary", &grid.config);
    out.push_str(
        "dataset,classifier,wgan_auc,best_constrained,best_constrained_auc,improved,best_augmenter,best_auc,iwgan_best,failed\n",
    );
    for g in &s.groups {
        let (bc, bca) = g
            .best_constrained
            .map_or(("-".to_string(), "NaN".to_string()), |(a, v)| (a.name(), fmt6(v)));
        let (ba, bav) = g
            .best_augmenter
            .map_or(("-".to_string(), "NaN".to_string()), |(a, v)| (a.name(), fmt6(v)));
        let failed = if g.failed_cells.is_empty() { "-".to_string() } else { g.failed_cells.join(";") };
        let _ = writeln!(
            out,
            "{},{},{},{bc},{bca},{},{ba},{bav},{},{failed}",
            g.dataset,
            g.classifier,
            opt6(g.wgan_auc),
            verdict(g.improved),
            verdict(g.iwgan_best),
        );
    }
    let _ = writeln!(
        out,
        "# improved={}/{} groups where the best of iwgan/mwgan/swgan has higher mean AUC than wgan",
        s.improved, s.improved_of
    );
    let _ = writeln!(
        out,
        "# iwgan_best={}/{} groups where iwgan has strictly higher mean AUC than every other augmenter except none",
        s.iwgan_best, s.iwgan_best_of
    );
    let _ = writeln!(
        out,
        "# failed_cells={} failed cells are left out of every comparison; a group without wgan or iwgan is marked excluded",
        s.failed_cells
    );
    out
}

pub fn convergence_csv(r: &ConvergenceResult, cfg: &ExperimentConfig) -> String {
    let mut out = header(&format!("convergence dataset={}", r.dataset), cfg);
    out.push_str("iter,wgan_gen_loss,iwgan_gen_loss\n");
    let n = r.wgan.len().max(r.iwgan.len());
    for i in 0..n {
        let w = r.wgan.records.get(i).map(|t| t.gen_loss);
        let v = r.iwgan.records.get(i).map(|t| t.gen_loss);
        let _ = writeln!(out, "{i},{},{}", opt6(w), opt6(v));
    }
    let _ = writeln!(
        out,
        "# iter0 wgan_gen_loss={} iwgan_gen_loss={} ratio_abs_iwgan_over_wgan={}",
        opt6(r.wgan.records.first().map(|t| t.gen_loss)),
        opt6(r.iwgan.records.first().map(|t| t.gen_loss)),
        opt6(r.initial_ratio())
    );
    for (name, f) in [("wgan", &r.wgan_failure), ("iwgan", &r.iwgan_failure)] {
        if let Some(e) = f {
            let _ = writeln!(out, "# {name} stopped: {e}");
        }
    }
    out
}

pub fn sweep_csv(t: &SweepTable, cfg: &ExperimentConfig) -> String {
    let mut out = header(&format!("sweep dataset={}", t.dataset), cfg);
    out.push_str("delta,classifier,mean_auc\n");
    for e in &t.entries {
        let _ = writeln!(
            out,
            "{},{},{}",
            fmt6(e.delta_fraction()),
            e.classifier,
            opt6(e.cell.mean_auc())
        );
    }
    for (clf, rho) in &t.trend {
        let _ = writeln!(out, "# spearman(|delta|, mean_auc) classifier={clf} rho={}", fmt6(*rho));
    }
    for e in t.entries.iter().filter(|e| e.cell.failure.is_some()) {
        let _ = writeln!(
            out,
            "# failed delta={} classifier={}: {}",
            fmt6(e.delta_fraction()),
            e.classifier,
            e.cell.failure.as_deref().unwrap_or("")
        );
    }
    out
}
