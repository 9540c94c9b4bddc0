//! Mini-batch training with Adam, step learning-rate decay, L2
//! regularization, validation-based model selection and early stopping.

mod adam;
mod checkpoint;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{
    AnyCheckpoint, Checkpoint, CheckpointError, RngState, TensorEntry, FORMAT_VERSION, MAGIC,
};

use crate::data::{AttributeTable, TrainingExample, Vocabulary};
use crate::eval::{evaluate_model, EvalError};
use crate::graph::{batch_graphs, ExampleGraphs, GraphError, GraphOptions};
use crate::model::{AttributeInit, Model, ModelConfig, ModelError};
use crate::tensor::{Precision, Scalar};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    Config(String),
    #[error("no training examples")]
    NoExamples,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub dim: usize,
    pub batch_size: usize,
    /// L2 penalty weight on all parameters.
    pub l2: f64,
    pub lr: f64,
    /// Multiplier applied every `decay_every` epochs.
    pub lr_decay: f64,
    pub decay_every: usize,
    pub epochs: usize,
    /// Epochs without a validation improvement before stopping; `None` never stops early.
    pub patience: Option<usize>,
    pub seed: u64,
    /// Gated propagation steps.
    pub steps: usize,
    /// Names of the attributes modeled, in channel order.
    pub attributes: Vec<String>,
    pub precision: Precision,
    /// Rescale gradients whose global norm exceeds this.
    pub clip_norm: Option<f64>,
    /// Fraction of the latest training sessions held out for model selection.
    pub validation_fraction: f64,
    /// Cutoff for the validation metrics.
    pub eval_k: usize,
    pub share_gru: bool,
    pub share_readout: bool,
    pub attribute_init: AttributeInit,
    pub gamma_init: f64,
    pub graph: GraphOptions,
    pub adam: AdamConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            dim: 64,
            batch_size: 512,
            l2: 1e-5,
            lr: 0.004,
            lr_decay: 0.1,
            decay_every: 2,
            epochs: 10,
            patience: Some(3),
            seed: 0,
            steps: 1,
            attributes: Vec::new(),
            precision: Precision::F32,
            clip_norm: None,
            validation_fraction: 0.1,
            eval_k: 20,
            share_gru: true,
            share_readout: false,
            attribute_init: AttributeInit::SessionItems,
            gamma_init: 10.0,
            graph: GraphOptions::default(),
            adam: AdamConfig::default(),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(TrainError::Config(m.to_string()));
        if self.lr.is_nan() || self.lr <= 0.0 {
            return fail("learning rate must be positive");
        }
        if self.batch_size == 0 {
            return fail("batch size must be at least 1");
        }
        if !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return fail("decay factor must lie in (0, 1]");
        }
        if self.decay_every == 0 {
            return fail("decay interval must be at least 1 epoch");
        }
        if self.dim == 0 {
            return fail("dimension must be positive");
        }
        if self.steps == 0 {
            return fail("propagation steps must be at least 1");
        }
        if self.l2.is_nan() || self.l2 < 0.0 {
            return fail("L2 weight must be non-negative");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return fail("validation fraction must lie in [0, 1)");
        }
        if self.eval_k == 0 {
            return fail("evaluation cutoff must be at least 1");
        }
        if matches!(self.clip_norm, Some(c) if c.is_nan() || c <= 0.0) {
            return fail("clip norm must be positive");
        }
        Ok(())
    }

    pub fn model_config(&self, num_items: usize, num_attributes: usize) -> ModelConfig {
        ModelConfig {
            num_items,
            dim: self.dim,
            num_attributes,
            steps: self.steps,
            share_gru: self.share_gru,
            share_readout: self.share_readout,
            attribute_init: self.attribute_init,
            gamma_init: self.gamma_init,
        }
    }
}

/// `lr * decay^floor(epoch / decay_every)` for a 0-based epoch.
pub fn lr_at_epoch(config: &TrainConfig, epoch: usize) -> f64 {
    config.lr
        * config
            .lr_decay
            .powi((epoch / config.decay_every.max(1)) as i32)
}

/// One row of the metrics log.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 0-based.
    pub epoch: usize,
    /// Mean training objective over the epoch's batches, weighted by batch size.
    pub loss: f64,
    pub recall: f64,
    pub mrr: f64,
    pub lr: f64,
    pub k: usize,
    /// L2 norm of all parameters after the epoch.
    pub param_norm: f64,
    pub skipped_batches: usize,
}

impl EpochRecord {
    pub fn csv_header(k: usize) -> String {
        format!("epoch,loss,recall@{k},mrr@{k},lr")
    }

    pub fn csv_row(&self) -> String {
        format!(
            "{},{},{},{},{}",
            self.epoch, self.loss, self.recall, self.mrr, self.lr
        )
    }
}

/// Metrics log text: header plus one row per record.
pub fn metrics_log(records: &[EpochRecord], k: usize) -> String {
    let mut out = EpochRecord::csv_header(k);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopReason {
    Completed,
    EarlyStopped {
        epoch: usize,
    },
    /// The training loss became non-finite during `epoch`.
    Diverged {
        epoch: usize,
    },
}

#[derive(Clone, Debug)]
pub struct TrainOutcome<T> {
    /// Parameters of the best validation epoch (the initial ones if none finished).
    pub best: Checkpoint<T>,
    /// Parameters after the last finished epoch.
    pub last: Checkpoint<T>,
    pub log: Vec<EpochRecord>,
    pub stop: StopReason,
}

/// Inputs of a training run.
#[derive(Clone, Copy, Debug)]
pub struct TrainingData<'a> {
    pub train: &'a [TrainingExample],
    /// Examples for model selection; when empty the training examples are used.
    pub validation: &'a [TrainingExample],
    pub vocabulary: &'a Vocabulary,
    /// Already restricted to the modeled attributes.
    pub attributes: &'a AttributeTable,
}

struct Snapshot<T> {
    model: Model<T>,
    adam: AdamState<T>,
    epoch: Option<usize>,
    recall: f64,
}

/// Trains a fresh model. `on_epoch` sees every finished epoch's record and
/// the best checkpoint so far, e.g. to persist them.
pub fn train<T: Scalar>(
    data: &TrainingData,
    config: &TrainConfig,
    on_epoch: &mut dyn FnMut(&EpochRecord, &Checkpoint<T>) -> Result<()>,
) -> Result<TrainOutcome<T>> {
    config.validate()?;
    if data.train.is_empty() {
        return Err(TrainError::NoExamples);
    }
    let mut config = config.clone();
    config.attributes = data.attributes.names().map(str::to_string).collect();
    config.precision = T::PRECISION;
    let model_config = config.model_config(data.vocabulary.len(), data.attributes.k());
    let mut model = Model::<T>::new(model_config, config.seed)?;
    let mut adam = AdamState::new(model.params.named().iter().map(|(_, t)| t.shape().len()));
    let validation = if data.validation.is_empty() {
        data.train
    } else {
        data.validation
    };

    let snapshot = |model: &Model<T>,
                    adam: &AdamState<T>,
                    epoch: usize,
                    best_epoch: Option<usize>,
                    history: &[EpochRecord]| Checkpoint {
        train_config: config.clone(),
        model: model.clone(),
        vocabulary: data.vocabulary.clone(),
        attributes: data.attributes.clone(),
        adam: adam.clone(),
        epoch,
        best_epoch,
        rng: RngState {
            seed: config.seed,
            next_epoch: epoch as u64,
        },
        history: history.to_vec(),
    };

    let mut best = Snapshot {
        model: model.clone(),
        adam: adam.clone(),
        epoch: None,
        recall: f64::NEG_INFINITY,
    };
    let mut log: Vec<EpochRecord> = Vec::new();
    let mut stop = StopReason::Completed;
    let mut stale = 0usize;
    for epoch in 0..config.epochs {
        let lr = lr_at_epoch(&config, epoch);
        let mut order: Vec<usize> = (0..data.train.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        rng.set_stream(epoch as u64 + 1);
        order.shuffle(&mut rng);

        let mut total = 0.0;
        let mut seen = 0usize;
        let mut skipped = 0usize;
        let mut diverged = false;
        for chunk in order.chunks(config.batch_size) {
            let examples: Vec<&TrainingExample> = chunk.iter().map(|&i| &data.train[i]).collect();
            let graphs = examples
                .iter()
                .map(|e| ExampleGraphs::build(&e.prefix, data.attributes, config.graph))
                .collect::<Result<Vec<_>, _>>()?;
            let refs: Vec<&ExampleGraphs> = graphs.iter().collect();
            let labels: Vec<usize> = examples.iter().map(|e| e.label).collect();
            let batch = batch_graphs(&refs, &labels)?;
            let mut out = model.loss_and_gradients(&batch, T::lit(config.l2))?;
            if !out.loss.is_finite() {
                log::error!("epoch {epoch}: loss became {}; stopping", out.loss);
                diverged = true;
                break;
            }
            if out.grads.iter().flatten().any(|g| !g.is_finite()) {
                log::warn!("epoch {epoch}: non-finite gradient, batch skipped");
                skipped += 1;
                continue;
            }
            if let Some(max) = config.clip_norm {
                clip(&mut out.grads, max);
            }
            let mut tensors = model.params.tensors_mut();
            let mut slices: Vec<&mut [T]> = tensors.iter_mut().map(|t| t.data_mut()).collect();
            adam_step(&mut slices, &out.grads, &mut adam, lr, &config.adam);
            total += out.loss.as_f64() * chunk.len() as f64;
            seen += chunk.len();
        }
        if diverged || !model.params.is_finite() {
            stop = StopReason::Diverged { epoch };
            break;
        }
        let report = evaluate_model(
            "murzim",
            &model,
            data.attributes,
            config.graph,
            validation,
            config.eval_k,
            config.batch_size,
        )?;
        let record = EpochRecord {
            epoch,
            loss: if seen == 0 {
                f64::NAN
            } else {
                total / seen as f64
            },
            recall: report.recall,
            mrr: report.mrr,
            lr,
            k: config.eval_k,
            param_norm: model.params.squared_norm().as_f64().sqrt(),
            skipped_batches: skipped,
        };
        log::info!(
            "epoch {epoch}: loss {:.5} recall@{k} {:.4} mrr@{k} {:.4} lr {lr}",
            record.loss,
            record.recall,
            record.mrr,
            k = config.eval_k
        );
        log.push(record.clone());
        if record.recall > best.recall {
            best = Snapshot {
                model: model.clone(),
                adam: adam.clone(),
                epoch: Some(epoch),
                recall: record.recall,
            };
            stale = 0;
        } else {
            stale += 1;
        }
        let best_ckpt = snapshot(&best.model, &best.adam, epoch + 1, best.epoch, &log);
        on_epoch(&record, &best_ckpt)?;
        if matches!(config.patience, Some(p) if stale >= p) {
            stop = StopReason::EarlyStopped { epoch };
            break;
        }
    }
    let done = log.len();
    Ok(TrainOutcome {
        best: snapshot(&best.model, &best.adam, done, best.epoch, &log),
        last: snapshot(&model, &adam, done, None, &log),
        log,
        stop,
    })
}

fn clip<T: Scalar>(grads: &mut [Vec<T>], max: f64) {
    let norm = grads
        .iter()
        .flatten()
        .map(|g| g.as_f64() * g.as_f64())
        .sum::<f64>()
        .sqrt();
    if norm > max {
        let s = T::lit(max / norm);
        for g in grads.iter_mut().flatten() {
            *g *= s;
        }
    }
}
