//! Mini-batch training with Adam and a reduce-on-plateau learning-rate schedule.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{backward, forward_trace, ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::geometry::ObjectModel;
use crate::gridcodec::{encode, CameraModel, GridTensor, SceneGroundTruth};
use crate::losses::{total_loss_grad, LossWeights, OriLoss};
use crate::scenegen::{interpolate_missing, DepthImage};

fn default_lr() -> f64 {
    0.01
}
fn default_patience() -> usize {
    3
}
fn default_decay() -> f64 {
    10.0
}
fn default_epochs() -> usize {
    100
}
fn default_batch() -> usize {
    8
}
fn default_loss() -> OriLoss {
    OriLoss::Euler
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    /// Epochs without strict improvement before the learning rate drops.
    #[serde(default = "default_patience")]
    pub patience: usize,
    #[serde(default = "default_decay")]
    pub decay_factor: f64,
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_loss")]
    pub loss: OriLoss,
    /// Defaults to the weights of the chosen loss variant.
    #[serde(default)]
    pub weights: Option<LossWeights>,
    /// Training stops once the learning rate falls below this value.
    #[serde(default)]
    pub min_lr: Option<f64>,
    /// Epochs trained with the Euler-angle loss before switching to `loss`.
    /// The optimizer and schedule restart after the warm-up.
    #[serde(default)]
    pub warmup_epochs: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: default_lr(),
            patience: default_patience(),
            decay_factor: default_decay(),
            epochs: default_epochs(),
            batch_size: default_batch(),
            loss: default_loss(),
            weights: None,
            min_lr: None,
            warmup_epochs: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.learning_rate > 0.0
            && self.learning_rate.is_finite()
            && self.patience >= 1
            && self.decay_factor > 1.0
            && self.batch_size >= 1;
        if !ok {
            return Err(Error::InvalidConfig(format!("invalid training config: {self:?}")));
        }
        Ok(())
    }

    pub fn loss_weights(&self) -> LossWeights {
        self.weights.unwrap_or_else(|| LossWeights::for_variant(self.loss))
    }
}

/// A network input with its encoded target.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingSample {
    pub input: Vec<f64>,
    pub target: GridTensor,
}

/// Fills missing depth and maps it to `[0, 1]` using the clipping planes.
pub fn prepare_input(depth: &DepthImage) -> Result<Vec<f64>> {
    Ok(interpolate_missing(depth)?.normalized())
}

pub fn prepare_sample(
    depth: &DepthImage,
    truth: &SceneGroundTruth,
    camera: &CameraModel,
    object: &ObjectModel,
    grid_size: usize,
) -> Result<TrainingSample> {
    let (target, _) = encode(truth, camera, grid_size, object)?;
    Ok(TrainingSample {
        input: prepare_input(depth)?,
        target,
    })
}

/// Loss of one sample and its parameter gradient.
pub fn sample_loss_grad(
    sample: &TrainingSample,
    params: &ModelParams,
    model: &ModelConfig,
    weights: &LossWeights,
    variant: OriLoss,
    object: &ObjectModel,
) -> Result<(f64, ModelParams)> {
    let trace = forward_trace(&sample.input, params, model)?;
    let output = trace.output(model);
    let (loss, d_output) = total_loss_grad(&sample.target, &output, weights, variant, object)?;
    let grads = backward(&trace, &d_output, params, model)?;
    Ok((loss, grads))
}

pub fn sample_loss(
    sample: &TrainingSample,
    params: &ModelParams,
    model: &ModelConfig,
    weights: &LossWeights,
    variant: OriLoss,
    object: &ObjectModel,
) -> Result<f64> {
    let output = forward_trace(&sample.input, params, model)?.output(model);
    crate::losses::total_loss(&sample.target, &output, weights, variant, object)
}

#[derive(Debug, Clone)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    pub fn new(len: usize, lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; len],
            v: vec![0.0; len],
        }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for (((p, g), m), v) in params.iter_mut().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / ((*v / c2).sqrt() + self.eps);
        }
    }
}

/// Divides the learning rate once the monitored loss has not strictly
/// improved for `patience` consecutive epochs.
#[derive(Debug, Clone)]
pub struct PlateauScheduler {
    pub lr: f64,
    patience: usize,
    factor: f64,
    best: f64,
    stale: usize,
}

impl PlateauScheduler {
    pub fn new(lr: f64, patience: usize, factor: f64) -> Self {
        Self {
            lr,
            patience,
            factor,
            best: f64::INFINITY,
            stale: 0,
        }
    }

    /// Records an epoch's loss and returns the learning rate for the next epoch.
    pub fn step(&mut self, loss: f64) -> f64 {
        if loss < self.best {
            self.best = loss;
            self.stale = 0;
        } else {
            self.stale += 1;
            if self.stale >= self.patience {
                self.lr /= self.factor;
                self.stale = 0;
            }
        }
        self.lr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
    pub lr: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainOutcome {
    pub params: ModelParams,
    pub history: Vec<EpochRecord>,
}

pub fn history_csv(history: &[EpochRecord]) -> String {
    let mut out = String::from("epoch,train_loss,val_loss,lr\n");
    for r in history {
        let val = r.val_loss.map(|v| v.to_string()).unwrap_or_default();
        out.push_str(&format!("{},{},{},{}\n", r.epoch, r.train_loss, val, r.lr));
    }
    out
}

/// Trains from the seeded initialization. `rng` drives the per-epoch
/// shuffling; the reported training loss is the mean per-image loss seen
/// during the epoch.
pub fn train<R: Rng + ?Sized>(
    train_set: &[TrainingSample],
    val_set: &[TrainingSample],
    model: &ModelConfig,
    config: &TrainConfig,
    object: &ObjectModel,
    rng: &mut R,
) -> Result<TrainOutcome> {
    let params = ModelParams::init(model)?;
    train_from(params, train_set, val_set, model, config, object, rng)
}

/// Like [`train`] but starts from the given parameters.
pub fn train_from<R: Rng + ?Sized>(
    mut params: ModelParams,
    train_set: &[TrainingSample],
    val_set: &[TrainingSample],
    model: &ModelConfig,
    config: &TrainConfig,
    object: &ObjectModel,
    rng: &mut R,
) -> Result<TrainOutcome> {
    model.validate()?;
    config.validate()?;
    params.check(model)?;
    if train_set.is_empty() {
        return Err(Error::InvalidConfig("training set is empty".into()));
    }
    if object.channels() != model.output_channels {
        return Err(Error::ShapeMismatch {
            expected: format!("{} output channels for {}", object.channels(), object.id),
            found: format!("{}", model.output_channels),
        });
    }
    let mut history = Vec::with_capacity(config.warmup_epochs + config.epochs);
    let warmup = config.warmup_epochs > 0 && config.loss != OriLoss::Euler;
    if warmup {
        let phase = Phase {
            loss: OriLoss::Euler,
            weights: LossWeights::for_variant(OriLoss::Euler),
            epochs: config.warmup_epochs,
            // the warm-up has its own target, so it is monitored on the training loss
            val_set: &[],
        };
        run_phase(&mut params, train_set, &phase, model, config, object, rng, &mut history)?;
    }
    let phase = Phase {
        loss: config.loss,
        weights: config.loss_weights(),
        epochs: config.epochs,
        val_set,
    };
    run_phase(&mut params, train_set, &phase, model, config, object, rng, &mut history)?;
    Ok(TrainOutcome { params, history })
}

struct Phase<'a> {
    loss: OriLoss,
    weights: LossWeights,
    epochs: usize,
    val_set: &'a [TrainingSample],
}

#[allow(clippy::too_many_arguments)]
fn run_phase<R: Rng + ?Sized>(
    params: &mut ModelParams,
    train_set: &[TrainingSample],
    phase: &Phase<'_>,
    model: &ModelConfig,
    config: &TrainConfig,
    object: &ObjectModel,
    rng: &mut R,
    history: &mut Vec<EpochRecord>,
) -> Result<()> {
    let weights = phase.weights;
    let mut adam = Adam::new(params.values.len(), config.learning_rate);
    let mut scheduler = PlateauScheduler::new(config.learning_rate, config.patience, config.decay_factor);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut grad_sum = vec![0.0; params.values.len()];
    let first = history.len();

    for epoch in first..first + phase.epochs {
        order.shuffle(rng);
        let mut epoch_loss = 0.0;
        for batch in order.chunks(config.batch_size) {
            grad_sum.fill(0.0);
            for &i in batch {
                let (loss, grads) =
                    sample_loss_grad(&train_set[i], params, model, &weights, phase.loss, object)?;
                if !loss.is_finite() {
                    return Err(Error::Divergence { epoch, loss });
                }
                epoch_loss += loss;
                for (s, g) in grad_sum.iter_mut().zip(&grads.values) {
                    *s += g;
                }
            }
            let scale = 1.0 / batch.len() as f64;
            grad_sum.iter_mut().for_each(|g| *g *= scale);
            adam.step(&mut params.values, &grad_sum);
        }
        let train_loss = epoch_loss / train_set.len() as f64;
        let val_loss = if phase.val_set.is_empty() {
            None
        } else {
            let mut sum = 0.0;
            for s in phase.val_set {
                sum += sample_loss(s, params, model, &weights, phase.loss, object)?;
            }
            Some(sum / phase.val_set.len() as f64)
        };
        let monitored = val_loss.unwrap_or(train_loss);
        if !monitored.is_finite() || params.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence {
                epoch,
                loss: monitored,
            });
        }
        history.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
            lr: adam.lr,
        });
        adam.lr = scheduler.step(monitored);
        if config.min_lr.map_or(false, |min| adam.lr < min) {
            break;
        }
    }
    Ok(())
}
