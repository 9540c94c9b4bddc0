//! Fixtures shared by the integration tests and the acceptance harness.

#![allow(dead_code)]

pub mod brute;

use murzim::data::{augment_prefixes, AttributeTable, TrainingExample, Vocabulary};
use murzim::synthetic::{generate, Signal, SyntheticCorpus, SyntheticSpec};
use murzim::train::TrainConfig;

/// 32 sessions over 20 items following a deterministic successor table,
/// with one 4-valued attribute: every prefix has exactly one right answer.
pub fn memorization_corpus() -> SyntheticCorpus {
    generate(&SyntheticSpec {
        num_items: 20,
        attribute_values: vec![4],
        sessions: 32,
        min_len: 3,
        max_len: 8,
        signal: Signal::Markov { p: 1.0 },
        seed: 42,
    })
    .unwrap()
}

pub struct Fixture {
    pub examples: Vec<TrainingExample>,
    pub vocabulary: Vocabulary,
    pub attributes: AttributeTable,
}

impl Fixture {
    pub fn from_corpus(c: &SyntheticCorpus) -> Self {
        Fixture {
            examples: augment_prefixes(&c.sessions),
            vocabulary: c.sessions.vocab.clone(),
            attributes: c.attributes.clone(),
        }
    }

    pub fn data(&self) -> murzim::train::TrainingData<'_> {
        murzim::train::TrainingData {
            train: &self.examples,
            validation: &[],
            vocabulary: &self.vocabulary,
            attributes: &self.attributes,
        }
    }
}

/// Memorization settings: constant learning rate, no early stopping,
/// selection on the training prefixes by Recall@1.
pub fn memorization_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        dim: 16,
        batch_size: 16,
        lr: 0.004,
        lr_decay: 1.0,
        epochs,
        patience: None,
        validation_fraction: 0.0,
        eval_k: 1,
        ..TrainConfig::default()
    }
}

/// A small corpus for quick training runs.
pub fn small_corpus(seed: u64) -> SyntheticCorpus {
    generate(&SyntheticSpec {
        num_items: 15,
        attribute_values: vec![3, 5],
        sessions: 24,
        min_len: 2,
        max_len: 6,
        signal: Signal::AttributeDriven {
            p: 0.9,
            attribute: 0,
        },
        seed,
    })
    .unwrap()
}

pub fn quick_config(epochs: usize) -> TrainConfig {
    TrainConfig {
        dim: 8,
        batch_size: 8,
        epochs,
        patience: None,
        validation_fraction: 0.0,
        ..TrainConfig::default()
    }
}

pub fn no_callback<T>(
) -> impl FnMut(&murzim::train::EpochRecord, &murzim::train::Checkpoint<T>) -> murzim::train::Result<()>
{
    |_, _| Ok(())
}
