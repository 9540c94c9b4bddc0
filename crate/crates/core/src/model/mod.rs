//! The recommendation network.
//!
//! Every prefix is seen through `1 + K` graphs: its item graph and one graph
//! per selected attribute. Item nodes start from the item embedding table;
//! attribute value nodes start from the projected embeddings of the items
//! carrying them. Each graph runs gated propagation and a soft-attention
//! readout into a sequence embedding. The item channel's sequence embedding
//! then gates every channel's embedding into a fused session vector, and
//! items are scored by temperature-scaled cosine similarity with a softmax.

mod layers;
mod params;

pub use layers::{
    attribute_node_embeddings, cross_entropy, fuse_sequences, item_logits, item_node_embeddings,
    l2_penalty, propagate, score_items, sequence_embedding,
};
pub use params::{AttributeInit, ModelConfig, ModelParams, ModelVars, ReadoutParams, ReadoutVars};

use crate::graph::GraphBatch;
use crate::tensor::{Scalar, Shape, Tape, Tensor, TensorError, Var};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ModelError {
    #[error(transparent)]
    Tensor(#[from] TensorError),
    #[error("batch has {found} graph channels but the model expects {expected}")]
    ChannelCount { expected: usize, found: usize },
    #[error("item index {item} outside a vocabulary of {num_items}")]
    ItemOutOfRange { item: usize, num_items: usize },
    #[error("parameter {name} has shape {found}, expected {expected}")]
    ParamShape {
        name: String,
        expected: Shape,
        found: Shape,
    },
    #[error("parameter layout mismatch: {0}")]
    ParamLayout(String),
    #[error("invalid model config: {0}")]
    Config(String),
}

pub type Result<T, E = ModelError> = std::result::Result<T, E>;

/// Tape handles of one forward pass.
#[derive(Clone, Debug)]
pub struct Recorded {
    pub sequences: Vec<Var>,
    pub fused: Var,
    pub logits: Var,
    pub probs: Var,
}

/// Values of one forward pass.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardOutput<T> {
    /// Per channel, `batch x d`.
    pub sequences: Vec<Tensor<T>>,
    /// `batch x d`.
    pub fused: Tensor<T>,
    /// Softmax probabilities, `batch x |V|`.
    pub probs: Tensor<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LossAndGrads<T> {
    /// Cross-entropy plus L2 penalty.
    pub loss: T,
    pub cross_entropy: T,
    /// One gradient per tensor, in [`ModelParams::named`] order.
    pub grads: Vec<Vec<T>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model<T> {
    pub config: ModelConfig,
    pub params: ModelParams<T>,
}

impl<T: Scalar> Model<T> {
    /// A freshly initialized model; equal seeds give identical parameters.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self> {
        validate(&config)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let params = ModelParams::init(&config, &mut rng);
        Ok(Model { config, params })
    }

    /// Wraps existing parameters after checking them against `config`.
    pub fn from_params(config: ModelConfig, params: ModelParams<T>) -> Result<Self> {
        validate(&config)?;
        let reference = ModelParams::<T>::zeros(&config);
        let want = reference.named();
        let have = params.named();
        if want.len() != have.len() {
            return Err(ModelError::ParamLayout(format!(
                "{} tensors, expected {}",
                have.len(),
                want.len()
            )));
        }
        for ((wn, wt), (hn, ht)) in want.iter().zip(&have) {
            if wn != hn {
                return Err(ModelError::ParamLayout(format!(
                    "found {hn}, expected {wn}"
                )));
            }
            if wt.shape() != ht.shape() {
                return Err(ModelError::ParamShape {
                    name: wn.clone(),
                    expected: wt.shape(),
                    found: ht.shape(),
                });
            }
        }
        Ok(Model { config, params })
    }

    fn check(&self, batch: &GraphBatch) -> Result<()> {
        if batch.channels.len() != self.config.channels() {
            return Err(ModelError::ChannelCount {
                expected: self.config.channels(),
                found: batch.channels.len(),
            });
        }
        let num_items = self.config.num_items;
        let items = batch.channels[0].nodes.iter().flatten();
        for &item in items.chain(&batch.labels) {
            if item >= num_items {
                return Err(ModelError::ItemOutOfRange { item, num_items });
            }
        }
        Ok(())
    }

    /// Records the forward pass of `batch` on `tape`.
    pub fn record(
        &self,
        tape: &mut Tape<T>,
        vars: &ModelVars,
        batch: &GraphBatch,
    ) -> Result<Recorded> {
        self.check(batch)?;
        let cfg = &self.config;
        let item_ch = &batch.channels[0];
        let item_nodes = item_node_embeddings(tape, vars.item_embeddings, item_ch)?;
        let mut sequences = Vec::with_capacity(cfg.channels());
        for (c, ch) in batch.channels.iter().enumerate() {
            let init = if c == 0 {
                item_nodes
            } else {
                attribute_node_embeddings(
                    tape,
                    item_nodes,
                    vars.attribute_proj[c - 1],
                    item_ch,
                    ch,
                    &batch.members[c - 1],
                    cfg.attribute_init,
                )?
            };
            let nodes = propagate(tape, init, ch, &vars.gru[cfg.gru_index(c)], cfg.steps)?;
            let readout = &vars.readout[cfg.readout_index(c)];
            sequences.push(sequence_embedding(tape, nodes, ch, readout)?);
        }
        let fused = fuse_sequences(tape, &sequences, vars.w_fuse)?;
        let logits = item_logits(tape, fused, vars.item_embeddings, vars.log_gamma)?;
        let probs = tape.softmax(logits);
        Ok(Recorded {
            sequences,
            fused,
            logits,
            probs,
        })
    }

    pub fn forward(&self, batch: &GraphBatch) -> Result<ForwardOutput<T>> {
        let mut tape = Tape::new();
        let vars = self.params.register(&mut tape);
        let rec = self.record(&mut tape, &vars, batch)?;
        Ok(ForwardOutput {
            sequences: rec.sequences.iter().map(|&v| tape.tensor(v)).collect(),
            fused: tape.tensor(rec.fused),
            probs: tape.tensor(rec.probs),
        })
    }

    /// Cosine logits only; ranks identically to the probabilities.
    pub fn logits(&self, batch: &GraphBatch) -> Result<Tensor<T>> {
        let mut tape = Tape::new();
        let vars = self.params.register(&mut tape);
        let rec = self.record(&mut tape, &vars, batch)?;
        Ok(tape.tensor(rec.logits))
    }

    fn record_loss(
        &self,
        tape: &mut Tape<T>,
        vars: &ModelVars,
        batch: &GraphBatch,
        l2: T,
    ) -> Result<(Var, Var)> {
        let rec = self.record(tape, vars, batch)?;
        let ce = cross_entropy(tape, rec.probs, &batch.labels)?;
        let reg = l2_penalty(tape, &vars.all, l2)?;
        Ok((tape.add(ce, reg)?, ce))
    }

    /// Mean cross-entropy over the batch plus `l2 * ||theta||^2`.
    pub fn loss(&self, batch: &GraphBatch, l2: T) -> Result<T> {
        let mut tape = Tape::new();
        let vars = self.params.register(&mut tape);
        let (loss, _) = self.record_loss(&mut tape, &vars, batch, l2)?;
        Ok(tape.scalar(loss))
    }

    pub fn loss_and_gradients(&self, batch: &GraphBatch, l2: T) -> Result<LossAndGrads<T>> {
        let mut tape = Tape::new();
        let vars = self.params.register(&mut tape);
        let (loss, ce) = self.record_loss(&mut tape, &vars, batch, l2)?;
        let grads = tape.backward(loss)?;
        Ok(LossAndGrads {
            loss: tape.scalar(loss),
            cross_entropy: tape.scalar(ce),
            grads: vars.all.iter().map(|&v| grads.wrt(v)).collect(),
        })
    }
}

fn validate(config: &ModelConfig) -> Result<()> {
    if config.dim == 0 {
        return Err(ModelError::Config("dimension must be positive".into()));
    }
    if config.num_items == 0 {
        return Err(ModelError::Config("empty item vocabulary".into()));
    }
    if config.gamma_init.is_nan() || config.gamma_init <= 0.0 {
        return Err(ModelError::Config("temperature must be positive".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests;
