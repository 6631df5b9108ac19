//! Deterministic mini-batch SGD.
//!
//! One run standardises features on the training split, initialises an
//! [`Mlp`] from `seed`, and then per epoch shuffles, steps through
//! mini-batches, decays the learning rate, advances the barrier temperature
//! (ELB only) and evaluates on validation. Parameters are carried over
//! between epochs and temperatures. The reported test metrics come from the
//! epoch with the best validation SOI (lower MAE breaks ties); the epoch with
//! the best validation MAE is tracked alongside.

use alloc::boxed::Box;
use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{kfold_indices, Dataset};
use crate::diff::{self, Tape, Var};
use crate::losses::{self, BarrierSchedule, LdConfig, MvConfig, PenaltyConfig, PoConfig};
use crate::metrics::{Evaluated, MetricsReport};
use crate::model::{Head, Mlp, MlpSpec};
use crate::ordinal::{self, Label};
use crate::{Error, Result};

/// The seven training objectives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LossKind {
    #[serde(rename = "CE")]
    Ce,
    #[serde(rename = "PN")]
    Pn,
    #[serde(rename = "ELB")]
    Elb,
    #[serde(rename = "REN")]
    Ren,
    #[serde(rename = "LD")]
    Ld,
    #[serde(rename = "MV")]
    Mv,
    #[serde(rename = "PO")]
    Po,
}

impl LossKind {
    pub const ALL: [LossKind; 7] = [
        LossKind::Ce,
        LossKind::Ren,
        LossKind::Ld,
        LossKind::Mv,
        LossKind::Po,
        LossKind::Pn,
        LossKind::Elb,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LossKind::Ce => "CE",
            LossKind::Pn => "PN",
            LossKind::Elb => "ELB",
            LossKind::Ren => "REN",
            LossKind::Ld => "LD",
            LossKind::Mv => "MV",
            LossKind::Po => "PO",
        }
    }

    /// Network head needed by the loss.
    pub fn head(self, classes: usize) -> Head {
        match self {
            LossKind::Po => Head::PoissonRate,
            _ => Head::Logits(classes),
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LossKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown loss `{s}`, expected one of CE, PN, ELB, REN, LD, MV, PO"
                ))
            })
    }
}

/// Settings of one training run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: f64,
    pub lr_decay_every: usize,
    pub lr_decay_factor: f64,
    pub lr_min: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    pub barrier: BarrierSchedule,
    pub penalty: PenaltyConfig,
    pub ld: LdConfig,
    pub mv: MvConfig,
    pub po: PoConfig,
    pub hidden: Vec<usize>,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            loss: LossKind::Ce,
            epochs: 300,
            batch_size: 8,
            lr: 1e-3,
            lr_decay_every: 100,
            lr_decay_factor: 0.1,
            lr_min: 1e-7,
            momentum: 0.9,
            weight_decay: 1e-5,
            barrier: BarrierSchedule::default(),
            penalty: PenaltyConfig::default(),
            ld: LdConfig::default(),
            mv: MvConfig::default(),
            po: PoConfig::default(),
            hidden: vec![32, 32],
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::Config(msg.to_string()));
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if !(self.lr > 0.0) || !(self.lr_min >= 0.0) {
            return bad("lr must be > 0 and lr_min >= 0");
        }
        if self.lr_decay_every == 0 || !(self.lr_decay_factor > 0.0) {
            return bad("lr_decay_every must be >= 1 and lr_decay_factor > 0");
        }
        if !(0.0..1.0).contains(&self.momentum) || !(self.weight_decay >= 0.0) {
            return bad("momentum must be in [0, 1) and weight_decay >= 0");
        }
        if !(self.ld.sigma > 0.0) || !(self.po.tau > 0.0) {
            return bad("ld.sigma and po.tau must be > 0");
        }
        if !(self.mv.lambda1 >= 0.0) || !(self.mv.lambda2 >= 0.0) {
            return bad("mv weights must be >= 0");
        }
        if self.hidden.contains(&0) {
            return bad("hidden widths must be >= 1");
        }
        self.barrier.validate()?;
        self.penalty.validate()
    }

    /// `max(lr * factor^floor(epoch / every), lr_min)` for a 0-based epoch.
    pub fn lr_at(&self, epoch: usize) -> f64 {
        let decays = (epoch / self.lr_decay_every) as f64;
        libm::fmax(self.lr * libm::pow(self.lr_decay_factor, decays), self.lr_min)
    }

    /// Barrier temperature used during a 0-based epoch.
    pub fn t_at(&self, epoch: usize) -> f64 {
        let mut schedule = self.barrier;
        schedule.reset();
        for _ in 0..epoch {
            schedule.step();
        }
        schedule.t()
    }
}

/// Training loss of one sample given the raw network output.
pub fn sample_loss(tape: &mut Tape, cfg: &TrainConfig, output: Var, y: Label, classes: usize, t: f64) -> Result<Var> {
    match cfg.loss {
        LossKind::Ce => losses::ce_loss(tape, output, y),
        LossKind::Pn => losses::pn_loss(tape, output, y, &cfg.penalty),
        LossKind::Elb => Ok(losses::elb_loss_terms(tape, output, y, t)?.total),
        LossKind::Ren => {
            let squashed = tape.sigmoid(output);
            losses::ren_loss(tape, squashed, y)
        }
        LossKind::Ld => losses::ld_loss(tape, output, y, &cfg.ld),
        LossKind::Mv => losses::mv_loss(tape, output, y, &cfg.mv),
        LossKind::Po => losses::po_loss(tape, output, y, classes, &cfg.po),
    }
}

/// Loss of one sample and its gradient with respect to the flat parameters of `model`.
pub fn sample_loss_gradient(
    model: &Mlp,
    cfg: &TrainConfig,
    x: &[f64],
    y: Label,
    classes: usize,
    t: f64,
) -> Result<(f64, Vec<f64>)> {
    let mut tape = Tape::new();
    let params = model.register(&mut tape)?;
    let out = model.forward_on_tape(&mut tape, &params, x)?;
    let loss = sample_loss(&mut tape, cfg, out, y, classes, t)?;
    let grads = tape.backward(loss)?;
    Ok((tape.scalar_value(loss), model.collect_gradient(&params, &grads)))
}

/// Smallest distance from any piecewise input of the sample loss to its breakpoint:
/// hidden pre-activations to 0, and for PN and ELB the constraint residuals to
/// 0 and `-1/t^2`. Finite differences are only meaningful when this exceeds the step.
pub fn kink_distance(model: &Mlp, cfg: &TrainConfig, x: &[f64], y: Label, t: f64) -> Result<f64> {
    let mut layers = model.pre_activations(x)?;
    let out = layers.pop().expect("at least one layer");
    let mut nearest = layers
        .iter()
        .flatten()
        .fold(f64::INFINITY, |m, z| libm::fmin(m, libm::fabs(*z)));
    let breakpoint = match cfg.loss {
        LossKind::Pn => Some(0.0),
        LossKind::Elb => Some(losses::barrier_breakpoint(t)),
        _ => None,
    };
    if let Some(b) = breakpoint {
        let signs = losses::constraint_signs(out.len(), y)?;
        for (k, w) in out.windows(2).enumerate() {
            nearest = libm::fmin(nearest, libm::fabs(signs[k] * (w[0] - w[1]) - b));
        }
    }
    Ok(nearest)
}

/// Log-posterior over labels and the prediction read from a raw network output.
///
/// Log-probabilities keep the order of the posterior while staying finite
/// when the scores are far apart. REN outputs are cumulative probabilities,
/// so their posterior is the squashed outputs normalised to unit mass.
pub fn interpret(kind: LossKind, output: &[f64], classes: usize, cfg: &TrainConfig) -> Result<(Vec<f64>, Label)> {
    Ok(match kind {
        LossKind::Ce | LossKind::Pn | LossKind::Elb | LossKind::Ld => {
            (ordinal::log_softmax(output), ordinal::predict_argmax(output))
        }
        LossKind::Mv => {
            let p = ordinal::softmax(output);
            (ordinal::log_softmax(output), ordinal::predict_expectation(&p))
        }
        LossKind::Po => {
            let logits = losses::po_label_logits(output[0], classes, &cfg.po)?;
            let p = ordinal::softmax(&logits);
            (ordinal::log_softmax(&logits), ordinal::predict_expectation(&p))
        }
        LossKind::Ren => {
            let squashed: Vec<f64> = output.iter().map(|&o| diff::sigmoid(o)).collect();
            // ln sigmoid(o) = -softplus(-o)
            let log_squashed: Vec<f64> = output.iter().map(|&o| -diff::softplus(-o)).collect();
            let log_total = diff::log_sum_exp(&log_squashed);
            (
                log_squashed.iter().map(|l| l - log_total).collect(),
                losses::ren_predict(&squashed),
            )
        }
    })
}

/// Metrics of `model` on `ds`.
pub fn evaluate(model: &Mlp, ds: &Dataset, cfg: &TrainConfig) -> Result<MetricsReport> {
    let classes = ds.space().classes();
    let samples = (0..ds.len())
        .map(|i| {
            let out = model.forward(ds.row(i))?;
            let (distribution, predicted) = interpret(cfg.loss, &out, classes, cfg)?;
            Ok(Evaluated {
                distribution,
                predicted,
                truth: ds.labels()[i],
            })
        })
        .collect::<Result<Vec<_>>>()?;
    MetricsReport::from_samples(&samples)
}

/// Per-column affine standardisation fitted on the training split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub scale: Vec<f64>,
}

impl Standardizer {
    /// Zero mean and unit variance per column; constant columns keep scale 1.
    pub fn fit(ds: &Dataset) -> Self {
        let d = ds.dim();
        let n = ds.len() as f64;
        let mut mean = vec![0.0; d];
        for i in 0..ds.len() {
            for (m, x) in mean.iter_mut().zip(ds.row(i)) {
                *m += x / n;
            }
        }
        let mut var = vec![0.0; d];
        for i in 0..ds.len() {
            for ((v, x), m) in var.iter_mut().zip(ds.row(i)).zip(&mean) {
                *v += (x - m) * (x - m) / n;
            }
        }
        let scale = var
            .into_iter()
            .map(|v| if v > 0.0 { libm::sqrt(v) } else { 1.0 })
            .collect();
        Self { mean, scale }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            mean: vec![0.0; dim],
            scale: vec![1.0; dim],
        }
    }

    pub fn apply_row(&self, src: &[f64], dst: &mut [f64]) {
        for (((d, x), m), s) in dst.iter_mut().zip(src).zip(&self.mean).zip(&self.scale) {
            *d = (x - m) / s;
        }
    }

    pub fn apply(&self, ds: &Dataset) -> Dataset {
        ds.map_features(|src, dst| self.apply_row(src, dst))
    }
}

/// Momentum buffer of SGD.
#[derive(Debug, Clone, PartialEq)]
pub struct SgdState {
    pub velocity: Vec<f64>,
}

impl SgdState {
    pub fn new(num_params: usize) -> Self {
        Self {
            velocity: vec![0.0; num_params],
        }
    }
}

/// `v <- momentum v + (g + weight_decay p)`, then `p <- p - lr v`.
///
/// Nothing is updated when any gradient entry is non-finite.
pub fn sgd_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut SgdState,
    lr: f64,
    momentum: f64,
    weight_decay: f64,
    batch: usize,
) -> Result<()> {
    if grads.len() != params.len() || state.velocity.len() != params.len() {
        return Err(Error::LengthMismatch {
            left: grads.len(),
            right: params.len(),
        });
    }
    if let Some(param) = grads.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFiniteGradient { param, batch });
    }
    for ((p, g), v) in params.iter_mut().zip(grads).zip(&mut state.velocity) {
        *v = momentum * *v + (g + weight_decay * *p);
        *p -= lr * *v;
    }
    Ok(())
}

/// One epoch of training and its validation metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based epoch number.
    pub epoch: usize,
    pub lr: f64,
    /// Barrier temperature used during the epoch (ELB only).
    pub t: Option<f64>,
    pub train_loss: f64,
    pub validation: MetricsReport,
}

/// Everything recorded about one run. Epoch 0 denotes the initial model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: TrainConfig,
    pub classes: usize,
    pub initial_validation: MetricsReport,
    pub epochs: Vec<EpochRecord>,
    /// Selected by best validation SOI, lower MAE breaking ties.
    pub best_epoch: usize,
    /// Selected by best validation MAE, higher SOI breaking ties.
    pub best_epoch_by_mae: usize,
    pub test: Option<MetricsReport>,
    pub test_by_mae: Option<MetricsReport>,
    /// Filled in by callers that have a clock.
    pub wall_time_secs: f64,
    pub failure: Option<String>,
}

/// A finished run with the parameters of its selected epoch.
#[derive(Debug, Clone)]
pub struct TrainedRun {
    pub record: RunRecord,
    pub model: Mlp,
    pub standardizer: Standardizer,
}

/// A run that stopped early; `record` holds everything up to the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainFailure {
    pub error: Error,
    pub record: Option<Box<RunRecord>>,
}

impl From<Error> for TrainFailure {
    fn from(error: Error) -> Self {
        Self { error, record: None }
    }
}

impl fmt::Display for TrainFailure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.error.fmt(f)
    }
}

fn soi_better(a: &MetricsReport, b: &MetricsReport) -> bool {
    a.soi_predicted > b.soi_predicted || (a.soi_predicted == b.soi_predicted && a.mae < b.mae)
}

fn mae_better(a: &MetricsReport, b: &MetricsReport) -> bool {
    a.mae < b.mae || (a.mae == b.mae && a.soi_predicted > b.soi_predicted)
}

struct Candidate {
    epoch: usize,
    metrics: MetricsReport,
    params: Vec<f64>,
}

/// Trains one model on `train`, selecting on `validation` and reporting on `test`.
pub fn train(
    train: &Dataset,
    validation: &Dataset,
    test: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainedRun, TrainFailure> {
    cfg.validate()?;
    let space = train.space();
    for other in [validation, test] {
        if other.space() != space || other.dim() != train.dim() {
            return Err(Error::Config("splits disagree on label space or feature dimension".into()).into());
        }
    }
    let classes = space.classes();
    let standardizer = Standardizer::fit(train);
    let (train, validation, test) = (
        standardizer.apply(train),
        standardizer.apply(validation),
        standardizer.apply(test),
    );

    let spec = MlpSpec {
        input_dim: train.dim(),
        hidden: cfg.hidden.clone(),
        head: cfg.loss.head(classes),
        seed: cfg.seed,
    };
    let mut model = Mlp::init(spec)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);

    let initial = evaluate(&model, &validation, cfg)?;
    let mut record = RunRecord {
        config: cfg.clone(),
        classes,
        initial_validation: initial.clone(),
        epochs: Vec::with_capacity(cfg.epochs),
        best_epoch: 0,
        best_epoch_by_mae: 0,
        test: None,
        test_by_mae: None,
        wall_time_secs: 0.0,
        failure: None,
    };
    let mut by_soi = Candidate {
        epoch: 0,
        metrics: initial.clone(),
        params: model.params().to_vec(),
    };
    let mut by_mae = Candidate {
        epoch: 0,
        metrics: initial,
        params: model.params().to_vec(),
    };

    let mut schedule = cfg.barrier;
    schedule.reset();
    let mut state = SgdState::new(model.num_params());
    let mut tape = Tape::new();
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut batch_index = 0;

    for epoch in 0..cfg.epochs {
        let lr = cfg.lr_at(epoch);
        let t = schedule.t();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        let step = run_epoch(
            &mut model,
            &train,
            &order,
            cfg,
            lr,
            t,
            &mut state,
            &mut tape,
            &mut batch_index,
            &mut loss_sum,
        );
        if let Err(error) = step {
            let error = match error {
                Error::NonFiniteLoss { batch, .. } => Error::NonFiniteLoss {
                    epoch: epoch + 1,
                    batch,
                },
                e => e,
            };
            record.failure = Some(error.to_string());
            record.best_epoch = by_soi.epoch;
            record.best_epoch_by_mae = by_mae.epoch;
            return Err(TrainFailure {
                error,
                record: Some(Box::new(record)),
            });
        }
        if cfg.loss == LossKind::Elb {
            schedule.step();
        }
        let val = evaluate(&model, &validation, cfg)?;
        if soi_better(&val, &by_soi.metrics) {
            by_soi = Candidate {
                epoch: epoch + 1,
                metrics: val.clone(),
                params: model.params().to_vec(),
            };
        }
        if mae_better(&val, &by_mae.metrics) {
            by_mae = Candidate {
                epoch: epoch + 1,
                metrics: val.clone(),
                params: model.params().to_vec(),
            };
        }
        record.epochs.push(EpochRecord {
            epoch: epoch + 1,
            lr,
            t: (cfg.loss == LossKind::Elb).then_some(t),
            train_loss: loss_sum / train.len() as f64,
            validation: val,
        });
    }

    let spec = model.spec().clone();
    let best = Mlp::from_params(spec.clone(), by_soi.params)?;
    let best_mae = Mlp::from_params(spec, by_mae.params)?;
    record.best_epoch = by_soi.epoch;
    record.best_epoch_by_mae = by_mae.epoch;
    record.test = Some(evaluate(&best, &test, cfg)?);
    record.test_by_mae = Some(evaluate(&best_mae, &test, cfg)?);
    Ok(TrainedRun {
        record,
        model: best,
        standardizer,
    })
}

#[allow(clippy::too_many_arguments)]
fn run_epoch(
    model: &mut Mlp,
    train: &Dataset,
    order: &[usize],
    cfg: &TrainConfig,
    lr: f64,
    t: f64,
    state: &mut SgdState,
    tape: &mut Tape,
    batch_index: &mut usize,
    loss_sum: &mut f64,
) -> Result<()> {
    let classes = train.space().classes();
    let mut batch_losses = Vec::with_capacity(cfg.batch_size);
    for batch in order.chunks(cfg.batch_size) {
        tape.clear();
        batch_losses.clear();
        let params = model.register(tape)?;
        for &i in batch {
            let out = model.forward_on_tape(tape, &params, train.row(i))?;
            batch_losses.push(sample_loss(tape, cfg, out, train.labels()[i], classes, t)?);
        }
        let loss = losses::batch_reduce(tape, &batch_losses)?;
        let value = tape.scalar_value(loss);
        if !value.is_finite() {
            return Err(Error::NonFiniteLoss {
                epoch: 0,
                batch: *batch_index,
            });
        }
        let grads = tape.backward(loss)?;
        let grad = model.collect_gradient(&params, &grads);
        sgd_step(
            model.params_mut(),
            &grad,
            state,
            lr,
            cfg.momentum,
            cfg.weight_decay,
            *batch_index,
        )?;
        *loss_sum += value * batch.len() as f64;
        *batch_index += 1;
    }
    Ok(())
}

/// Mean and sample standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
    pub n: usize,
}

impl MeanStd {
    /// `std` uses the `n - 1` denominator and is 0 for fewer than two values.
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std = if n < 2 {
            0.0
        } else {
            libm::sqrt(values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64)
        };
        Self { mean, std, n }
    }
}

/// Test metrics aggregated over successful runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub mae: MeanStd,
    pub soi_predicted: MeanStd,
    pub soi_true: MeanStd,
    pub failed: Vec<usize>,
}

impl Aggregate {
    pub fn of<'a>(records: impl IntoIterator<Item = &'a RunRecord>) -> Self {
        let mut mae = Vec::new();
        let mut soi_p = Vec::new();
        let mut soi_t = Vec::new();
        let mut failed = Vec::new();
        for (i, r) in records.into_iter().enumerate() {
            match (&r.test, &r.failure) {
                (Some(t), None) => {
                    mae.push(t.mae);
                    soi_p.push(t.soi_predicted);
                    soi_t.push(t.soi_true);
                }
                _ => failed.push(i),
            }
        }
        Self {
            mae: MeanStd::of(&mae),
            soi_predicted: MeanStd::of(&soi_p),
            soi_true: MeanStd::of(&soi_t),
            failed,
        }
    }
}

/// Outcome of [`kfold`].
#[derive(Debug, Clone)]
pub struct KFold {
    pub folds: Vec<Vec<usize>>,
    pub runs: Vec<Result<TrainedRun, TrainFailure>>,
    pub aggregate: Aggregate,
}

/// `k` runs where fold `i` validates and the remaining folds train; every run
/// is tested on the same held-out `test` set. Fold `i` uses seed `cfg.seed + i`.
pub fn kfold(trainval: &Dataset, test: &Dataset, k: usize, seed: u64, cfg: &TrainConfig) -> Result<KFold> {
    let folds = kfold_indices(trainval.labels(), trainval.space().classes(), k, seed)?.folds;
    let mut runs = Vec::with_capacity(k);
    for (i, fold) in folds.iter().enumerate() {
        let rest: Vec<usize> = folds
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .flat_map(|(_, f)| f.iter().copied())
            .collect();
        let train_ds = trainval.subset(&rest)?;
        let val_ds = trainval.subset(fold)?;
        let fold_cfg = TrainConfig {
            seed: cfg.seed.wrapping_add(i as u64),
            ..cfg.clone()
        };
        runs.push(train(&train_ds, &val_ds, test, &fold_cfg));
    }
    let records: Vec<RunRecord> = runs
        .iter()
        .map(|r| match r {
            Ok(run) => run.record.clone(),
            Err(f) => f
                .record
                .as_deref()
                .cloned()
                .unwrap_or_else(|| failed_placeholder(cfg, trainval.space().classes(), &f.error)),
        })
        .collect();
    let aggregate = Aggregate::of(&records);
    Ok(KFold { folds, runs, aggregate })
}

/// Record of a run that failed before its first evaluation.
pub fn failed_placeholder(cfg: &TrainConfig, classes: usize, error: &Error) -> RunRecord {
    let empty = MetricsReport {
        mae: 0.0,
        soi_predicted: 0.0,
        soi_true: 0.0,
        violations: Vec::new(),
        n_samples: 0,
    };
    RunRecord {
        config: cfg.clone(),
        classes,
        initial_validation: empty,
        epochs: Vec::new(),
        best_epoch: 0,
        best_epoch_by_mae: 0,
        test: None,
        test_by_mae: None,
        wall_time_secs: 0.0,
        failure: Some(error.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{generate, split, SyntheticSpec};
    use crate::ordinal::LabelSpace;

    #[test]
    fn sgd_plain_descent() {
        let mut p = [1.0, -2.0];
        let mut s = SgdState::new(2);
        sgd_step(&mut p, &[0.5, 1.0], &mut s, 0.1, 0.0, 0.0, 0).unwrap();
        assert_eq!(p, [0.95, -2.1]);
    }

    #[test]
    fn sgd_zero_gradient_keeps_params() {
        let mut p = [1.0, -2.0];
        let mut s = SgdState::new(2);
        sgd_step(&mut p, &[0.0, 0.0], &mut s, 0.1, 0.9, 0.0, 0).unwrap();
        assert_eq!(p, [1.0, -2.0]);
    }

    #[test]
    fn sgd_two_steps_on_half_square() {
        let mut x = [1.0];
        let mut s = SgdState::new(1);
        for _ in 0..2 {
            let g = [x[0]];
            sgd_step(&mut x, &g, &mut s, 0.1, 0.0, 0.0, 0).unwrap();
        }
        assert!((x[0] - 0.81).abs() < 1e-15);
    }

    #[test]
    fn sgd_rejects_non_finite() {
        let mut p = [1.0, 1.0];
        let mut s = SgdState::new(2);
        let err = sgd_step(&mut p, &[0.0, f64::NAN], &mut s, 0.1, 0.0, 0.0, 7).unwrap_err();
        assert_eq!(err, Error::NonFiniteGradient { param: 1, batch: 7 });
        assert_eq!(p, [1.0, 1.0]);
    }

    #[test]
    fn lr_and_t_schedules() {
        let cfg = TrainConfig::default();
        assert_eq!(cfg.lr_at(0), 1e-3);
        assert_eq!(cfg.lr_at(99), 1e-3);
        assert!((cfg.lr_at(100) - 1e-4).abs() < 1e-18);
        assert!((cfg.lr_at(250) - 1e-5).abs() < 1e-19);
        assert_eq!(cfg.lr_at(100_000), 1e-7);
        assert_eq!(cfg.t_at(0), 1.0);
        let mut prev = 0.0;
        for e in [1, 10, 300, 1609, 1610, 5000] {
            let t = cfg.t_at(e);
            assert!(t >= prev && t <= 5.0);
            assert!((t - libm::fmin(libm::pow(1.001, e as f64), 5.0)).abs() < 1e-9);
            prev = t;
        }
    }

    #[test]
    fn loss_names_parse() {
        for k in LossKind::ALL {
            assert_eq!(k.name().parse::<LossKind>().unwrap(), k);
        }
        assert!("hinge".parse::<LossKind>().is_err());
    }

    #[test]
    fn mean_std() {
        let m = MeanStd::of(&[0.5, 0.5, 0.5]);
        assert_eq!((m.mean, m.std), (0.5, 0.0));
        let m = MeanStd::of(&[1.0, 3.0]);
        assert!((m.std - libm::sqrt(2.0)).abs() < 1e-15);
    }

    fn tiny() -> (Dataset, Dataset, Dataset) {
        let ds = generate(&SyntheticSpec {
            classes: 3,
            dim: 2,
            n: 60,
            noise_sigma: 0.1,
            embed_seed: 0,
            sample_seed: 1,
        })
        .unwrap();
        let s = split(&ds, [0.6, 0.2, 0.2], 0).unwrap();
        (
            ds.subset(&s.train).unwrap(),
            ds.subset(&s.validation).unwrap(),
            ds.subset(&s.test).unwrap(),
        )
    }

    #[test]
    fn zero_epochs_reports_initial_model() {
        let (tr, va, te) = tiny();
        let cfg = TrainConfig {
            epochs: 0,
            hidden: vec![4],
            ..TrainConfig::default()
        };
        let run = train(&tr, &va, &te, &cfg).unwrap();
        assert!(run.record.epochs.is_empty());
        assert_eq!(run.record.best_epoch, 0);
        let init = Mlp::init(MlpSpec {
            input_dim: 2,
            hidden: vec![4],
            head: Head::Logits(3),
            seed: 0,
        })
        .unwrap();
        assert_eq!(run.model.params(), init.params());
    }

    #[test]
    fn every_loss_trains_deterministically() {
        let (tr, va, te) = tiny();
        for loss in LossKind::ALL {
            let cfg = TrainConfig {
                loss,
                epochs: 3,
                hidden: vec![4],
                seed: 5,
                ..TrainConfig::default()
            };
            let a = train(&tr, &va, &te, &cfg).unwrap();
            let b = train(&tr, &va, &te, &cfg).unwrap();
            assert_eq!(a.record, b.record, "{loss}");
            assert_eq!(a.record.epochs.len(), 3);
            assert_eq!(a.record.epochs[0].t.is_some(), loss == LossKind::Elb);
        }
    }

    #[test]
    fn train_rejects_mismatched_splits() {
        let (tr, va, _) = tiny();
        let other = va.map_features(|s, d| d.copy_from_slice(s));
        let space4 = LabelSpace::new(4).unwrap();
        let te = Dataset::new(
            vec![0.0, 0.0],
            2,
            vec![Label::new(4)],
            space4,
            crate::data::Provenance::Subset,
        )
        .unwrap();
        assert!(train(&tr, &other, &te, &TrainConfig::default()).is_err());
    }

    #[test]
    fn kfold_aggregates_identical_runs() {
        let (tr, _, te) = tiny();
        let cfg = TrainConfig {
            epochs: 0,
            hidden: vec![3],
            ..TrainConfig::default()
        };
        let k = kfold(&tr, &te, 2, 0, &cfg).unwrap();
        assert_eq!(k.runs.len(), 2);
        let total: usize = k.folds.iter().map(Vec::len).sum();
        assert_eq!(total, tr.len());
        assert!(k.aggregate.failed.is_empty());
        assert_eq!(k.aggregate.mae.n, 2);
        let same = Aggregate::of([&k.runs[0].as_ref().unwrap().record, &k.runs[0].as_ref().unwrap().record]);
        assert_eq!(same.mae.std, 0.0);
        assert_eq!(same.soi_predicted.std, 0.0);
    }
}
