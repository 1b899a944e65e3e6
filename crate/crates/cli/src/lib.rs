//! `tabaug` command line: augmentation, GAN training, the three experiment
//! drivers and a self-check.
//!
//! Settings resolve as flag, then `--config` JSON file, then built-in
//! default. Exit codes: 0 ok, 1 usage, 2 data or input error, 3 numeric fault.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use tabaug_core::arch::{ArchSpec, ConstraintKind, RelativeDelta};
use tabaug_core::classifiers::ClassifierKind;
use tabaug_core::data::{self, Dataset, DatasetDescriptor};
use tabaug_core::eval::{self, report, Augmenter, ExperimentConfig};
use tabaug_core::gan::{self, GanError};
use tabaug_core::nn::{gradient_check, random_case, Activation, Loss, Matrix};
use tabaug_core::rng::{derive_seed, SeededRng};
use tabaug_core::Error;

pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "tabaug", version, about = "Minority-class augmentation experiments for tabular data")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate synthetic minority rows for one dataset.
    Augment(AugmentArgs),
    /// Train a GAN pair on a dataset's minority rows.
    Train(TrainArgs),
    /// Cross-validated AUC for every dataset, augmenter and classifier.
    Grid(GridArgs),
    /// Paired WGAN and IWGAN generator-loss traces.
    Convergence(ConvergenceArgs),
    /// r-IWGAN width sweep against the isomorphic reference.
    Sweep(SweepArgs),
    /// Self-test: gradient checks, AUC oracle, architecture validators.
    Check(CheckArgs),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Master seed [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
    /// JSON config file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory holding the registry data files.
    #[arg(long, default_value = "data")]
    pub data_dir: PathBuf,
    /// GAN training iterations [default: 2000]
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Cross-validation folds [default: 10]
    #[arg(long)]
    pub folds: Option<usize>,
}

#[derive(Args, Debug)]
pub struct AugmentArgs {
    /// Registry name or path to a delimited file (label in the last column).
    #[arg(long)]
    pub dataset: String,
    #[arg(long, value_parser = parse_augmenter)]
    pub method: Augmenter,
    /// Rows to generate [default: enough to balance the classes]
    #[arg(long)]
    pub n: Option<usize>,
    /// Output CSV file.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub dataset: String,
    /// A GAN-based method: gan, wgan, iwgan, mwgan, swgan, r_iwgan_1..6.
    #[arg(long, value_parser = parse_augmenter)]
    pub method: Augmenter,
    /// Output directory for model.json and trace.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct GridArgs {
    /// `all` or a comma-separated list of registry names.
    #[arg(long, default_value = "all")]
    pub datasets: String,
    /// Comma-separated augmenters [default: none,smote,gan,wgan,iwgan,mwgan,swgan,r_iwgan_1]
    #[arg(long, value_delimiter = ',', value_parser = parse_augmenter)]
    pub augmenters: Vec<Augmenter>,
    /// Comma-separated classifiers [default: ann,svm,knn,rf,gbc]
    #[arg(long, value_delimiter = ',', value_parser = parse_classifier)]
    pub classifiers: Vec<ClassifierKind>,
    /// Output directory for grid.csv and summary.csv.
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct ConvergenceArgs {
    #[arg(long, default_value = "german")]
    pub dataset: String,
    /// Output directory for convergence_<dataset>.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long, default_value = "german")]
    pub dataset: String,
    #[arg(long, value_delimiter = ',', value_parser = parse_classifier)]
    pub classifiers: Vec<ClassifierKind>,
    /// Output directory for sweep.csv.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug)]
pub struct CheckArgs {
    #[arg(long)]
    pub seed: Option<u64>,
}

fn parse_augmenter(s: &str) -> Result<Augmenter, String> {
    s.parse().map_err(|e: eval::EvalError| e.to_string())
}

fn parse_classifier(s: &str) -> Result<ClassifierKind, String> {
    ClassifierKind::from_name(s).ok_or_else(|| {
        format!(
            "unknown classifier '{s}'; valid classifiers: {}",
            ClassifierKind::NAMES.join(", ")
        )
    })
}

/// Optional overrides read from `--config`. Field names follow the
/// training config; `g_hidden`/`d_hidden` follow the architecture spec.
#[derive(Debug, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub folds: Option<usize>,
    pub iterations: Option<usize>,
    pub batch_size: Option<usize>,
    pub n_critic: Option<usize>,
    pub clip_c: Option<f64>,
    pub learning_rate: Option<f64>,
    pub optimizer: Option<String>,
    pub gan_learning_rate: Option<f64>,
    pub g_hidden: Option<Vec<usize>>,
    pub d_hidden: Option<Vec<usize>>,
    pub smote_k: Option<usize>,
}

#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn data(message: impl Into<String>) -> Self {
        Self { code: EXIT_DATA, message: message.into() }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let numeric = match &e {
            Error::Nn(_) => true,
            Error::Gan(g) | Error::Eval(eval::EvalError::Gan(g)) => {
                matches!(g, GanError::Diverged { .. } | GanError::Numeric { .. } | GanError::Nn(_))
            }
            _ => false,
        };
        Self {
            code: if numeric { EXIT_NUMERIC } else { EXIT_DATA },
            message: e.to_string(),
        }
    }
}

macro_rules! lift {
    ($($t:ty),*) => {$(
        impl From<$t> for Failure {
            fn from(e: $t) -> Self {
                Error::from(e).into()
            }
        }
    )*};
}
lift!(
    eval::EvalError,
    data::DataError,
    GanError,
    tabaug_core::arch::ArchError,
    tabaug_core::nn::NnError
);

/// Resolves flag > config file > default into an experiment config.
pub fn resolve_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let file = match &common.config {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| Failure::data(format!("config {}: {e}", p.display())))?;
            serde_json::from_str::<FileConfig>(&text)
                .map_err(|e| Failure::data(format!("config {}: {e}", p.display())))?
        }
        None => FileConfig::default(),
    };
    let mut cfg = ExperimentConfig::default();
    if let Some(v) = file.seed {
        cfg.seed = v;
    }
    if let Some(v) = file.folds {
        cfg.folds = v;
    }
    if let Some(v) = file.smote_k {
        cfg.smote_k = v;
    }
    if let Some(v) = file.g_hidden {
        cfg.hidden = v;
    }
    if let Some(v) = file.d_hidden {
        cfg.reference_critic_hidden = v;
    }
    for tc in [&mut cfg.wgan, &mut cfg.gan] {
        if let Some(v) = file.iterations {
            tc.iterations = v;
        }
        if let Some(v) = file.batch_size {
            tc.batch_size = v;
        }
        if let Some(v) = file.clip_c {
            tc.clip_c = v;
        }
    }
    if let Some(v) = file.n_critic {
        cfg.wgan.n_critic = v;
    }
    if let Some(v) = file.learning_rate {
        cfg.wgan.learning_rate = v;
    }
    if let Some(v) = &file.optimizer {
        cfg.wgan.optimizer = v.parse().map_err(|e| Failure::data(format!("config optimizer: {e}")))?;
    }
    if let Some(v) = file.gan_learning_rate {
        cfg.gan.learning_rate = v;
    }

    if let Some(v) = common.seed {
        cfg.seed = v;
    }
    if let Some(v) = common.folds {
        cfg.folds = v;
    }
    if let Some(v) = common.iterations {
        cfg.wgan.iterations = v;
        cfg.gan.iterations = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// A registry name, or a path to a delimited file.
pub fn load(name: &str, data_dir: &Path) -> Result<Dataset, Failure> {
    if data::descriptor(name).is_some() {
        return Ok(data::load_registered(name, data_dir)?);
    }
    let path = Path::new(name);
    if path.is_file() {
        return Ok(data::load_dataset(&DatasetDescriptor::generic(path), path)?);
    }
    Err(Failure::data(format!(
        "data: `{name}` is neither a registry dataset (australian, german, pima, spect) nor a file"
    )))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::data(format!("cannot create {}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| Failure::data(format!("cannot write {}: {e}", path.display())))
}

fn gan_spec(method: &Augmenter, d: usize, cfg: &ExperimentConfig) -> Result<ArchSpec, Failure> {
    method.spec(d, cfg)?.ok_or_else(|| Failure {
        code: EXIT_USAGE,
        message: format!("method '{method}' is not GAN-based; use gan, wgan, iwgan, mwgan, swgan or r_iwgan_1..6"),
    })
}

fn augment(a: &AugmentArgs) -> Result<String, Failure> {
    let cfg = resolve_config(&a.common)?;
    let ds = load(&a.dataset, &a.common.data_dir)?;
    let (minority, majority) = data::split_by_class(&ds);
    let n = a.n.unwrap_or(majority.rows().saturating_sub(minority.rows()));
    let seed = derive_seed(cfg.seed, &[&ds.name, &a.method.name(), "augment"]);
    let rows = eval::augment(&a.method, &minority, n, &cfg, seed)?;
    let mut out = report::header(&format!("augment dataset={} method={}", ds.name, a.method), &cfg);
    out.push_str(&ds.feature_names.join(","));
    out.push_str(",label\n");
    for r in rows.row_iter() {
        for v in r {
            out.push_str(&report::fmt6(*v));
            out.push(',');
        }
        let _ = writeln!(out, "{}", ds.minority_label);
    }
    write(&a.out, &out)?;
    Ok(format!("wrote {} synthetic rows to {}", rows.rows(), a.out.display()))
}

fn train(a: &TrainArgs) -> Result<String, Failure> {
    let cfg = resolve_config(&a.common)?;
    let ds = load(&a.dataset, &a.common.data_dir)?;
    let (minority, _) = data::split_by_class(&ds);
    let spec = gan_spec(&a.method, ds.features(), &cfg)?;
    let mut tc = if a.method == Augmenter::Gan { cfg.gan.clone() } else { cfg.wgan.clone() };
    tc.seed = derive_seed(cfg.seed, &[&ds.name, &a.method.name(), "train"]);
    tc.batch_size = tc.batch_size.min(minority.rows());
    let (model, trace) = gan::train(&minority, &spec, &tc)?;
    let mut csv = report::header(&format!("trace dataset={} method={}", ds.name, a.method), &cfg);
    csv.push_str(&trace.to_csv());
    write(&a.out.join("model.json"), &model.to_json())?;
    write(&a.out.join("trace.csv"), &csv)?;
    let last = trace.records.last().map_or(f64::NAN, |r| r.gen_loss);
    Ok(format!(
        "trained {} for {} iterations, final gen_loss {}; wrote {}",
        a.method,
        trace.len(),
        report::fmt6(last),
        a.out.display()
    ))
}

fn dataset_names(spec: &str) -> Vec<String> {
    if spec == "all" {
        data::registry().into_iter().map(|d| d.name).collect()
    } else {
        spec.split(',').map(|s| s.trim().to_string()).filter(|s| !s.is_empty()).collect()
    }
}

fn grid(a: &GridArgs) -> Result<String, Failure> {
    let cfg = resolve_config(&a.common)?;
    let datasets = dataset_names(&a.datasets)
        .iter()
        .map(|n| load(n, &a.common.data_dir))
        .collect::<Result<Vec<_>, _>>()?;
    let augmenters = if a.augmenters.is_empty() { Augmenter::grid_default() } else { a.augmenters.clone() };
    let classifiers = if a.classifiers.is_empty() { ClassifierKind::all_defaults() } else { a.classifiers.clone() };
    let g = eval::run_grid(&datasets, &augmenters, &classifiers, &cfg)?;
    let s = g.summary();
    write(&a.out.join("grid.csv"), &report::grid_csv(&g))?;
    write(&a.out.join("summary.csv"), &report::summary_csv(&g, &s))?;
    let mut msg = format!(
        "{} cells ({} failed); improved {}/{}, iwgan best {}/{}; wrote {}",
        g.cells.len(),
        s.failed_cells,
        s.improved,
        s.improved_of,
        s.iwgan_best,
        s.iwgan_best_of,
        a.out.display()
    );
    for c in g.cells.iter().filter(|c| c.failure.is_some()) {
        let _ = write!(msg, "\nfailed {}/{}/{}: {}", c.dataset, c.augmenter, c.classifier, c.failure.as_deref().unwrap_or(""));
    }
    Ok(msg)
}

fn convergence(a: &ConvergenceArgs) -> Result<String, Failure> {
    let cfg = resolve_config(&a.common)?;
    let ds = load(&a.dataset, &a.common.data_dir)?;
    let r = eval::convergence_compare(&ds, &cfg)?;
    let path = a.out.join(format!("convergence_{}.csv", ds.name));
    write(&path, &report::convergence_csv(&r, &cfg))?;
    Ok(format!(
        "iteration-0 |iwgan|/|wgan| generator loss ratio {}; wrote {}",
        r.initial_ratio().map_or("NaN".into(), report::fmt6),
        path.display()
    ))
}

fn sweep(a: &SweepArgs) -> Result<String, Failure> {
    let cfg = resolve_config(&a.common)?;
    let ds = load(&a.dataset, &a.common.data_dir)?;
    let classifiers = if a.classifiers.is_empty() { ClassifierKind::all_defaults() } else { a.classifiers.clone() };
    let t = eval::relative_iso_sweep(&ds, &classifiers, &RelativeDelta::all(), &cfg)?;
    let path = a.out.join("sweep.csv");
    write(&path, &report::sweep_csv(&t, &cfg))?;
    let mut msg = String::new();
    for (clf, rho) in &t.trend {
        let _ = writeln!(msg, "{clf}: spearman(|delta|, auc) = {}", report::fmt6(*rho));
    }
    let _ = write!(msg, "wrote {}", path.display());
    Ok(msg)
}

fn brute_auc(s: &[f64], y: &[u8]) -> f64 {
    let (mut w, mut p) = (0.0, 0.0);
    for i in 0..s.len() {
        for j in 0..s.len() {
            if y[i] == 1 && y[j] == 0 {
                p += 1.0;
                w += if s[i] > s[j] { 1.0 } else if s[i] == s[j] { 0.5 } else { 0.0 };
            }
        }
    }
    w / p
}

fn check(a: &CheckArgs) -> Result<String, Failure> {
    let mut rng = SeededRng::new(a.seed.unwrap_or(0));
    let mut out = String::new();

    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let widths: Vec<usize> = (0..2 + rng.below(3)).map(|_| 1 + rng.below(16)).collect();
        let hidden = Activation::ALL[i % 4];
        let output = Activation::ALL[(i / 4) % 4];
        let (net, batch) = random_case(&mut rng, &widths, hidden, output, 4)?;
        let o = *widths.last().unwrap();
        let target = Matrix::from_vec(4, o, (0..4 * o).map(|_| rng.uniform()).collect())?;
        let r = gradient_check(&net, &batch, &Loss::SquaredError(target))?;
        worst = worst.max(r.max_relative_error);
    }
    let grad_ok = worst < 1e-6;
    let _ = writeln!(out, "{} gradient check: 20 nets, max relative error {worst:.3e}", tag(grad_ok));

    let mut auc_ok = true;
    for _ in 0..200 {
        let n = 2 + rng.below(60);
        let s: Vec<f64> = (0..n).map(|_| rng.below(8) as f64).collect();
        let mut y: Vec<u8> = (0..n).map(|_| rng.below(2) as u8).collect();
        y[0] = 0;
        y[1] = 1;
        let a = eval::auc(&s, &y).map_err(Error::from)?;
        auc_ok &= (a - brute_auc(&s, &y)).abs() < 1e-12;
    }
    let _ = writeln!(out, "{} auc oracle: 200 tied instances match pair counting", tag(auc_ok));

    let mut arch_ok = true;
    for i in 0..200 {
        let d = 1 + rng.below(30);
        let hidden: Vec<usize> = (0..1 + rng.below(3)).map(|_| 1 + rng.below(64)).collect();
        let spec = match i % 4 {
            0 => ArchSpec::isomorphic(d, &hidden)?,
            1 => ArchSpec::mirror(d, &hidden)?,
            2 => ArchSpec::self_symmetric(d, &hidden)?,
            _ => ArchSpec::relative_isomorphic(d, &hidden, RelativeDelta::all()[i % 6])?,
        };
        arch_ok &= spec.validate().is_ok() && ArchSpec::from_json(&spec.to_json()).ok().as_ref() == Some(&spec);
        if let ConstraintKind::Mirror = spec.constraint {
            let back: Vec<usize> = spec.d_hidden().iter().rev().copied().collect();
            arch_ok &= back == spec.g_hidden();
        }
    }
    let widths = |p: i32| {
        ArchSpec::relative_isomorphic(8, &[64, 32], RelativeDelta::from_percent(p).unwrap())
            .map(|s| s.d_hidden().to_vec())
    };
    arch_ok &= widths(10)? == [70, 35] && widths(-30)? == [45, 22];
    let _ = writeln!(out, "{} architecture validators: 200 specs round trip, r-IWGAN widths", tag(arch_ok));

    if grad_ok && auc_ok && arch_ok {
        out.push_str("all checks passed");
        Ok(out)
    } else {
        Err(Failure { code: EXIT_NUMERIC, message: out })
    }
}

fn tag(ok: bool) -> &'static str {
    if ok {
        "ok  "
    } else {
        "FAIL"
    }
}

/// Runs a parsed command; returns the text for stdout.
pub fn run(cmd: &Command) -> Result<String, Failure> {
    match cmd {
        Command::Augment(a) => augment(a),
        Command::Train(a) => train(a),
        Command::Grid(a) => grid(a),
        Command::Convergence(a) => convergence(a),
        Command::Sweep(a) => sweep(a),
        Command::Check(a) => check(a),
    }
}

/// Parses `args` (program name first), runs, prints, and returns the exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { 0 };
        }
    };
    match run(&cli.command) {
        Ok(msg) => {
            println!("{msg}");
            0
        }
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}
