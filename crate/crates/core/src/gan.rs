//! Adversarial training of generator/critic pairs.
//!
//! Two games are supported:
//!
//! - `wgan`: the critic `f` maximizes `E[f(x)] - E[f(g(z))]` with its
//!   parameters clipped to `[-clip_c, clip_c]` after every update; the
//!   generator minimizes `-E[f(g(z))]`.
//! - `gan`: the discriminator `D = sigmoid(f)` maximizes
//!   `E[log D(x)] + E[log(1 - D(g(z)))]`; the generator minimizes the
//!   non-saturating `-E[log D(g(z))]`.
//!
//! Noise rows are uniform on `[-1, 1]^noise_dim`. Hidden layers use relu,
//! the generator ends in a sigmoid (data lives in `[0, 1]`), the WGAN critic
//! is linear at the output and the GAN discriminator ends in a sigmoid.

use serde::{Deserialize, Serialize};

use crate::arch::{ArchError, ArchSpec};
use crate::nn::{
    sigmoid, softplus, Activation, ActivationStack, Matrix, MlpParams, NnError, OptimizerConfig,
    OptimizerKind, OptimizerState,
};
use crate::rng::{derive_seed, SeededRng};

/// Losses beyond this magnitude abort training.
pub const DIVERGENCE_LIMIT: f64 = 1e6;

#[derive(Debug, thiserror::Error)]
pub enum GanError {
    #[error("rejected input: {0}")]
    Rejected(String),
    #[error(transparent)]
    Arch(#[from] ArchError),
    #[error("training diverged at iteration {iteration}: {detail}")]
    Diverged { iteration: usize, detail: String },
    #[error("numeric fault at iteration {iteration}: {source}")]
    Numeric {
        iteration: usize,
        #[source]
        source: NnError,
    },
    #[error(transparent)]
    Nn(#[from] NnError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    Gan,
    Wgan,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub iterations: usize,
    pub batch_size: usize,
    /// Critic updates per generator update.
    pub n_critic: usize,
    pub clip_c: f64,
    pub learning_rate: f64,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    pub loss_kind: LossKind,
}

impl TrainConfig {
    /// RMSProp at 5e-5, clip 0.01, five critic steps, batches of 64.
    pub fn wgan() -> Self {
        Self {
            iterations: 2000,
            batch_size: 64,
            n_critic: 5,
            clip_c: 0.01,
            learning_rate: 5e-5,
            optimizer: OptimizerKind::RmsProp,
            seed: 0,
            loss_kind: LossKind::Wgan,
        }
    }

    /// Adam at 2e-4, one discriminator step per generator step.
    pub fn gan() -> Self {
        Self {
            iterations: 2000,
            batch_size: 64,
            n_critic: 1,
            clip_c: 0.01,
            learning_rate: 2e-4,
            optimizer: OptimizerKind::Adam,
            seed: 0,
            loss_kind: LossKind::Gan,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_iterations(mut self, iterations: usize) -> Self {
        self.iterations = iterations;
        self
    }

    pub fn validate(&self) -> Result<(), GanError> {
        if self.batch_size < 2 {
            return Err(GanError::Rejected(format!("batch_size {} < 2", self.batch_size)));
        }
        if self.n_critic < 1 {
            return Err(GanError::Rejected("n_critic must be >= 1".into()));
        }
        if !(self.clip_c > 0.0 && self.clip_c.is_finite()) {
            return Err(GanError::Rejected(format!("clip_c {} must be positive", self.clip_c)));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(GanError::Rejected(format!(
                "learning_rate {} must be positive",
                self.learning_rate
            )));
        }
        Ok(())
    }

    fn optimizer_config(&self) -> OptimizerConfig {
        let mut c = OptimizerConfig::for_kind(self.optimizer, self.learning_rate);
        if self.loss_kind == LossKind::Gan && self.optimizer == OptimizerKind::Adam {
            c.momentum = 0.5;
        }
        c
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub generator: MlpParams,
    pub critic: MlpParams,
    pub spec: ArchSpec,
    pub trained_for: usize,
}

impl GanModel {
    /// Freshly initialized pair for `spec`. WGAN critics start clipped.
    pub fn initialize(spec: &ArchSpec, cfg: &TrainConfig) -> Result<Self, GanError> {
        spec.validate()?;
        let mut grng = SeededRng::new(derive_seed(cfg.seed, &["gan", "generator_init"]));
        let mut crng = SeededRng::new(derive_seed(cfg.seed, &["gan", "critic_init"]));
        let generator =
            MlpParams::glorot(&spec.g_widths, Activation::Relu, Activation::Sigmoid, &mut grng)?;
        let head = match cfg.loss_kind {
            LossKind::Gan => Activation::Sigmoid,
            LossKind::Wgan => Activation::Identity,
        };
        let mut critic = MlpParams::glorot(&spec.d_widths, Activation::Relu, head, &mut crng)?;
        if cfg.loss_kind == LossKind::Wgan {
            critic.clip_weights(cfg.clip_c);
        }
        Ok(Self {
            generator,
            critic,
            spec: spec.clone(),
            trained_for: 0,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("GanModel serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, GanError> {
        let m: GanModel =
            serde_json::from_str(s).map_err(|e| GanError::Rejected(format!("bad model JSON: {e}")))?;
        m.spec.validate()?;
        m.generator.validate()?;
        m.critic.validate()?;
        if m.generator.layer_widths() != m.spec.g_widths || m.critic.layer_widths() != m.spec.d_widths {
            return Err(GanError::Rejected("network widths disagree with the embedded spec".into()));
        }
        Ok(m)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub iteration: usize,
    /// Critic objective on the last critic batch of the iteration, measured
    /// before that batch's update.
    pub critic_obj: f64,
    /// Generator loss on the generator batch, before its update.
    pub gen_loss: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LossTrace {
    pub records: Vec<TraceRecord>,
}

impl LossTrace {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn gen_losses(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.gen_loss).collect()
    }

    /// CSV with header `iter,critic_obj,gen_loss`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("iter,critic_obj,gen_loss\n");
        for r in &self.records {
            s.push_str(&format!("{},{:.6},{:.6}\n", r.iteration, r.critic_obj, r.gen_loss));
        }
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Critic,
    Generator,
}

/// Snapshot handed to a training observer after every update.
pub struct StepEvent<'a> {
    pub iteration: usize,
    pub phase: Phase,
    pub generator: &'a MlpParams,
    pub critic: &'a MlpParams,
    /// Critic outputs on the batch(es) used by this update, before it.
    pub outputs: &'a [&'a Matrix],
}

fn noise(rng: &mut SeededRng, rows: usize, dim: usize) -> Matrix {
    let data = (0..rows * dim).map(|_| rng.uniform_in(-1.0, 1.0)).collect();
    Matrix::from_vec(rows, dim, data).expect("noise is finite")
}

fn check_data(data: &Matrix, spec: &ArchSpec, cfg: &TrainConfig) -> Result<(), GanError> {
    cfg.validate()?;
    spec.validate()?;
    if data.cols() != spec.data_dim {
        return Err(GanError::Rejected(format!(
            "data has {} columns, spec expects {}",
            data.cols(),
            spec.data_dim
        )));
    }
    if data.rows() < cfg.batch_size {
        return Err(GanError::Rejected(format!(
            "{} data rows is fewer than batch_size {}",
            data.rows(),
            cfg.batch_size
        )));
    }
    if let Some(v) = data.as_slice().iter().find(|v| !(0.0..=1.0).contains(*v)) {
        return Err(GanError::Rejected(format!("data entry {v} outside [0, 1]")));
    }
    Ok(())
}

fn guard(iteration: usize, what: &str, v: f64) -> Result<(), GanError> {
    if !v.is_finite() || v.abs() > DIVERGENCE_LIMIT {
        return Err(GanError::Diverged {
            iteration,
            detail: format!("{what} = {v}"),
        });
    }
    Ok(())
}

fn mean_col(m: &Matrix) -> f64 {
    m.mean()
}

struct Trainer<'a> {
    data: &'a Matrix,
    cfg: &'a TrainConfig,
    model: GanModel,
    g_opt: OptimizerState,
    c_opt: OptimizerState,
    rng: SeededRng,
}

impl<'a> Trainer<'a> {
    fn new(data: &'a Matrix, spec: &ArchSpec, cfg: &'a TrainConfig) -> Result<Self, GanError> {
        let model = GanModel::initialize(spec, cfg)?;
        let oc = cfg.optimizer_config();
        Ok(Self {
            data,
            cfg,
            g_opt: OptimizerState::new(oc, &model.generator),
            c_opt: OptimizerState::new(oc, &model.critic),
            model,
            rng: SeededRng::new(derive_seed(cfg.seed, &["gan", "train"])),
        })
    }

    fn real_batch(&mut self) -> Matrix {
        let idx = self.rng.sample_indices(self.data.rows(), self.cfg.batch_size);
        self.data.select_rows(&idx)
    }

    fn fake_batch(&mut self) -> Result<Matrix, NnError> {
        let z = noise(&mut self.rng, self.cfg.batch_size, self.model.spec.noise_dim);
        self.model.generator.predict(&z)
    }

    /// One critic update; returns the critic objective before the update.
    fn critic_step(
        &mut self,
        real: &Matrix,
        fake: &Matrix,
        it: usize,
        observer: &mut dyn FnMut(&StepEvent),
    ) -> Result<f64, GanError> {
        let num = |source| GanError::Numeric { iteration: it, source };
        let b = self.cfg.batch_size as f64;
        let critic = &self.model.critic;
        let sr = critic.forward(real).map_err(num)?;
        let sf = critic.forward(fake).map_err(num)?;
        let (obj, mut grads) = match self.cfg.loss_kind {
            LossKind::Wgan => {
                let obj = mean_col(sr.output()) - mean_col(sf.output());
                let mut g = critic
                    .backward(&sr, &Matrix::filled(real.rows(), 1, -1.0 / b))
                    .map_err(num)?;
                let gf = critic
                    .backward(&sf, &Matrix::filled(fake.rows(), 1, 1.0 / b))
                    .map_err(num)?;
                g.add_assign(&gf);
                (obj, g)
            }
            LossKind::Gan => {
                // value = mean log D(x) + mean log(1 - D(G(z))), from logits
                let lr = sr.output_pre();
                let lf = sf.output_pre();
                let obj = -lr.as_slice().iter().map(|&s| softplus(-s)).sum::<f64>() / b
                    - lf.as_slice().iter().map(|&s| softplus(s)).sum::<f64>() / b;
                let gr = lr.map(|s| (sigmoid(s) - 1.0) / b);
                let gf = lf.map(|s| sigmoid(s) / b);
                let mut g = critic.backward_from_logits(&sr, &gr).map_err(num)?;
                g.add_assign(&critic.backward_from_logits(&sf, &gf).map_err(num)?);
                (obj, g)
            }
        };
        guard(it, "critic objective", obj)?;
        grads.input = Matrix::zeros(0, 0);
        self.c_opt.step(&mut self.model.critic, &grads).map_err(num)?;
        if self.cfg.loss_kind == LossKind::Wgan {
            self.model.critic.clip_weights(self.cfg.clip_c);
        }
        observer(&StepEvent {
            iteration: it,
            phase: Phase::Critic,
            generator: &self.model.generator,
            critic: &self.model.critic,
            outputs: &[sr.output(), sf.output()],
        });
        Ok(obj)
    }

    fn generator_step(
        &mut self,
        it: usize,
        observer: &mut dyn FnMut(&StepEvent),
    ) -> Result<f64, GanError> {
        let num = |source| GanError::Numeric { iteration: it, source };
        let b = self.cfg.batch_size as f64;
        let z = noise(&mut self.rng, self.cfg.batch_size, self.model.spec.noise_dim);
        let gs: ActivationStack = self.model.generator.forward(&z).map_err(num)?;
        let cs = self.model.critic.forward(gs.output()).map_err(num)?;
        let (loss, cgrad) = match self.cfg.loss_kind {
            LossKind::Wgan => {
                let loss = -mean_col(cs.output());
                let g = self
                    .model
                    .critic
                    .backward(&cs, &Matrix::filled(z.rows(), 1, -1.0 / b))
                    .map_err(num)?;
                (loss, g)
            }
            LossKind::Gan => {
                let l = cs.output_pre();
                let loss = l.as_slice().iter().map(|&s| softplus(-s)).sum::<f64>() / b;
                let g = self
                    .model
                    .critic
                    .backward_from_logits(&cs, &l.map(|s| (sigmoid(s) - 1.0) / b))
                    .map_err(num)?;
                (loss, g)
            }
        };
        guard(it, "generator loss", loss)?;
        let mut ggrad = self.model.generator.backward(&gs, &cgrad.input).map_err(num)?;
        ggrad.input = Matrix::zeros(0, 0);
        self.g_opt.step(&mut self.model.generator, &ggrad).map_err(num)?;
        observer(&StepEvent {
            iteration: it,
            phase: Phase::Generator,
            generator: &self.model.generator,
            critic: &self.model.critic,
            outputs: &[cs.output()],
        });
        Ok(loss)
    }
}

/// Trains with the game selected by `cfg.loss_kind`.
pub fn train(data: &Matrix, spec: &ArchSpec, cfg: &TrainConfig) -> Result<(GanModel, LossTrace), GanError> {
    train_observed(data, spec, cfg, &mut |_| {})
}

/// [`train`] with a callback after every critic and generator update.
pub fn train_observed(
    data: &Matrix,
    spec: &ArchSpec,
    cfg: &TrainConfig,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<(GanModel, LossTrace), GanError> {
    let mut trace = LossTrace::default();
    let model = run(data, spec, cfg, &mut trace, observer)?;
    Ok((model, trace))
}

/// Like [`train`], but keeps the trace recorded up to a failure.
pub fn train_partial(data: &Matrix, spec: &ArchSpec, cfg: &TrainConfig) -> (Result<GanModel, GanError>, LossTrace) {
    let mut trace = LossTrace::default();
    let model = run(data, spec, cfg, &mut trace, &mut |_| {});
    (model, trace)
}

fn run(
    data: &Matrix,
    spec: &ArchSpec,
    cfg: &TrainConfig,
    trace: &mut LossTrace,
    observer: &mut dyn FnMut(&StepEvent),
) -> Result<GanModel, GanError> {
    check_data(data, spec, cfg)?;
    let mut t = Trainer::new(data, spec, cfg)?;
    for it in 0..cfg.iterations {
        let mut critic_obj = 0.0;
        for _ in 0..cfg.n_critic {
            let real = t.real_batch();
            let fake = t
                .fake_batch()
                .map_err(|source| GanError::Numeric { iteration: it, source })?;
            critic_obj = t.critic_step(&real, &fake, it, observer)?;
        }
        let gen_loss = t.generator_step(it, observer)?;
        trace.records.push(TraceRecord {
            iteration: it,
            critic_obj,
            gen_loss,
        });
        t.model.trained_for = it + 1;
    }
    Ok(t.model)
}

pub fn train_wgan(data: &Matrix, spec: &ArchSpec, cfg: &TrainConfig) -> Result<(GanModel, LossTrace), GanError> {
    if cfg.loss_kind != LossKind::Wgan {
        return Err(GanError::Rejected("train_wgan needs loss_kind = wgan".into()));
    }
    train(data, spec, cfg)
}

pub fn train_gan(data: &Matrix, spec: &ArchSpec, cfg: &TrainConfig) -> Result<(GanModel, LossTrace), GanError> {
    if cfg.loss_kind != LossKind::Gan {
        return Err(GanError::Rejected("train_gan needs loss_kind = gan".into()));
    }
    train(data, spec, cfg)
}

/// Trains only the critic, against a fixed sample standing in for the
/// generator's distribution. The generator keeps its initialization.
pub fn train_critic(
    real: &Matrix,
    fake: &Matrix,
    spec: &ArchSpec,
    cfg: &TrainConfig,
) -> Result<GanModel, GanError> {
    check_data(real, spec, cfg)?;
    check_data(fake, spec, cfg)?;
    let mut t = Trainer::new(real, spec, cfg)?;
    for it in 0..cfg.iterations {
        let r = t.real_batch();
        let idx = t.rng.sample_indices(fake.rows(), cfg.batch_size);
        let f = fake.select_rows(&idx);
        t.critic_step(&r, &f, it, &mut |_| {})?;
    }
    t.model.trained_for = cfg.iterations;
    Ok(t.model)
}

/// `n` generated rows from noise drawn with `seed`.
pub fn sample(model: &GanModel, n: usize, seed: u64) -> Result<Matrix, GanError> {
    if n == 0 {
        return Ok(Matrix::with_cols(model.spec.data_dim));
    }
    let mut rng = SeededRng::new(seed);
    let z = noise(&mut rng, n, model.spec.noise_dim);
    Ok(model.generator.predict(&z)?)
}

/// Dual estimate `mean f(real) - mean f(fake)`.
pub fn critic_estimate(model: &GanModel, real: &Matrix, fake: &Matrix) -> Result<f64, GanError> {
    if real.rows() == 0 || fake.rows() == 0 {
        return Err(GanError::Rejected("critic_estimate needs non-empty batches".into()));
    }
    let r = model.critic.predict(real)?;
    let f = model.critic.predict(fake)?;
    Ok(r.mean() - f.mean())
}
