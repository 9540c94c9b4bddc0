use crate::tensor::{GruParams, GruVars, Scalar, Shape, Tape, Tensor, Var};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// How an attribute value node's initial embedding averages the projected
/// embeddings of the session items carrying that value.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum AttributeInit {
    /// Divide by the number of distinct items in the session.
    #[default]
    SessionItems,
    /// Divide by the number of session items that carry the value.
    CarryingItems,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub num_items: usize,
    pub dim: usize,
    pub num_attributes: usize,
    /// Gated propagation steps per graph.
    pub steps: usize,
    /// One GRU for all channels instead of one per channel.
    pub share_gru: bool,
    /// One set of node-attention weights for all channels.
    pub share_readout: bool,
    pub attribute_init: AttributeInit,
    /// Initial softmax temperature on cosine scores.
    pub gamma_init: f64,
}

impl ModelConfig {
    pub fn new(num_items: usize, dim: usize, num_attributes: usize) -> Self {
        ModelConfig {
            num_items,
            dim,
            num_attributes,
            steps: 1,
            share_gru: true,
            share_readout: false,
            attribute_init: AttributeInit::SessionItems,
            gamma_init: 10.0,
        }
    }

    pub fn channels(&self) -> usize {
        1 + self.num_attributes
    }

    pub fn gru_index(&self, channel: usize) -> usize {
        if self.share_gru {
            0
        } else {
            channel
        }
    }

    pub fn readout_index(&self, channel: usize) -> usize {
        if self.share_readout {
            0
        } else {
            channel
        }
    }
}

/// Node-to-sequence attention weights of one channel.
#[derive(Clone, Debug, PartialEq)]
pub struct ReadoutParams<T> {
    /// Applied to the last node embedding, `d x d`.
    pub w_last: Tensor<T>,
    /// Applied to every node embedding, `d x d`.
    pub w_node: Tensor<T>,
    /// Attention query, `d x 1`.
    pub q: Tensor<T>,
    /// Attention bias, `1 x d`.
    pub c: Tensor<T>,
    /// Output projection of `[pooled ; last]`, `2d x d`.
    pub w_out: Tensor<T>,
}

impl<T: Scalar> ReadoutParams<T> {
    pub fn zeros(d: usize) -> Self {
        ReadoutParams {
            w_last: Tensor::zeros(Shape::new(d, d)),
            w_node: Tensor::zeros(Shape::new(d, d)),
            q: Tensor::zeros(Shape::new(d, 1)),
            c: Tensor::zeros(Shape::new(1, d)),
            w_out: Tensor::zeros(Shape::new(2 * d, d)),
        }
    }

    fn named_mut(&mut self) -> [(&'static str, &mut Tensor<T>); 5] {
        [
            ("w_last", &mut self.w_last),
            ("w_node", &mut self.w_node),
            ("q", &mut self.q),
            ("c", &mut self.c),
            ("w_out", &mut self.w_out),
        ]
    }

    fn named(&self) -> [(&'static str, &Tensor<T>); 5] {
        [
            ("w_last", &self.w_last),
            ("w_node", &self.w_node),
            ("q", &self.q),
            ("c", &self.c),
            ("w_out", &self.w_out),
        ]
    }

    pub fn register(&self, tape: &mut Tape<T>) -> ReadoutVars {
        ReadoutVars {
            w_last: tape.leaf(&self.w_last),
            w_node: tape.leaf(&self.w_node),
            q: tape.leaf(&self.q),
            c: tape.leaf(&self.c),
            w_out: tape.leaf(&self.w_out),
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReadoutVars {
    pub w_last: Var,
    pub w_node: Var,
    pub q: Var,
    pub c: Var,
    pub w_out: Var,
}

/// Every trainable tensor of the network.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelParams<T> {
    /// `|V| x d`, one row per item.
    pub item_embeddings: Tensor<T>,
    /// Per attribute, `d x d` projection from item to value space.
    pub attribute_proj: Vec<Tensor<T>>,
    pub gru: Vec<GruParams<T>>,
    pub readout: Vec<ReadoutParams<T>>,
    /// Bilinear sequence-fusion weight, `d x d`.
    pub w_fuse: Tensor<T>,
    /// Log of the cosine temperature, `1 x 1`.
    pub log_gamma: Tensor<T>,
}

fn is_bias(name: &str) -> bool {
    name.ends_with(".c") || name.contains(".b_")
}

impl<T: Scalar> ModelParams<T> {
    pub fn zeros(config: &ModelConfig) -> Self {
        let d = config.dim;
        let grus = if config.share_gru {
            1
        } else {
            config.channels()
        };
        let readouts = if config.share_readout {
            1
        } else {
            config.channels()
        };
        ModelParams {
            item_embeddings: Tensor::zeros(Shape::new(config.num_items, d)),
            attribute_proj: (0..config.num_attributes)
                .map(|_| Tensor::zeros(Shape::new(d, d)))
                .collect(),
            gru: (0..grus).map(|_| GruParams::zeros(2 * d, d)).collect(),
            readout: (0..readouts).map(|_| ReadoutParams::zeros(d)).collect(),
            w_fuse: Tensor::zeros(Shape::new(d, d)),
            log_gamma: Tensor::scalar(T::lit(config.gamma_init.ln())),
        }
    }

    /// Weights and embeddings uniform in `(-1/sqrt(d), 1/sqrt(d))`, biases zero,
    /// temperature at `gamma_init`.
    pub fn init<R: Rng>(config: &ModelConfig, rng: &mut R) -> Self {
        let mut p = Self::zeros(config);
        let bound = 1.0 / (config.dim as f64).sqrt();
        for (name, t) in p.named_mut() {
            if is_bias(&name) || name == "log_gamma" {
                continue;
            }
            for x in t.data_mut() {
                *x = T::lit(rng.gen_range(-bound..bound));
            }
        }
        p
    }

    /// All tensors with stable names, in registration order.
    pub fn named(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = vec![("item_embeddings".to_string(), &self.item_embeddings)];
        for (j, t) in self.attribute_proj.iter().enumerate() {
            out.push((format!("attribute_proj.{j}"), t));
        }
        for (i, g) in self.gru.iter().enumerate() {
            for (n, t) in g.named() {
                out.push((format!("gru.{i}.{n}"), t));
            }
        }
        for (i, r) in self.readout.iter().enumerate() {
            for (n, t) in r.named() {
                out.push((format!("readout.{i}.{n}"), t));
            }
        }
        out.push(("w_fuse".to_string(), &self.w_fuse));
        out.push(("log_gamma".to_string(), &self.log_gamma));
        out
    }

    pub fn named_mut(&mut self) -> Vec<(String, &mut Tensor<T>)> {
        let mut out = vec![("item_embeddings".to_string(), &mut self.item_embeddings)];
        for (j, t) in self.attribute_proj.iter_mut().enumerate() {
            out.push((format!("attribute_proj.{j}"), t));
        }
        for (i, g) in self.gru.iter_mut().enumerate() {
            for (n, t) in g.named_mut() {
                out.push((format!("gru.{i}.{n}"), t));
            }
        }
        for (i, r) in self.readout.iter_mut().enumerate() {
            for (n, t) in r.named_mut() {
                out.push((format!("readout.{i}.{n}"), t));
            }
        }
        out.push(("w_fuse".to_string(), &mut self.w_fuse));
        out.push(("log_gamma".to_string(), &mut self.log_gamma));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Tensor<T>> {
        self.named_mut().into_iter().map(|(_, t)| t).collect()
    }

    pub fn num_scalars(&self) -> usize {
        self.named().iter().map(|(_, t)| t.shape().len()).sum()
    }

    pub fn squared_norm(&self) -> T {
        self.named()
            .iter()
            .fold(T::zero(), |acc, (_, t)| acc + t.squared_norm())
    }

    pub fn is_finite(&self) -> bool {
        self.named().iter().all(|(_, t)| t.is_finite())
    }

    pub fn gamma(&self) -> T {
        self.log_gamma.data()[0].exp()
    }

    /// Records every tensor as a tape leaf, in [`ModelParams::named`] order.
    pub fn register(&self, tape: &mut Tape<T>) -> ModelVars {
        let mut all = Vec::new();
        let item_embeddings = tape.leaf(&self.item_embeddings);
        all.push(item_embeddings);
        let attribute_proj: Vec<Var> = self.attribute_proj.iter().map(|t| tape.leaf(t)).collect();
        all.extend(&attribute_proj);
        let gru: Vec<GruVars> = self.gru.iter().map(|g| g.register(tape)).collect();
        for g in &gru {
            all.extend(g.all());
        }
        let readout: Vec<ReadoutVars> = self.readout.iter().map(|r| r.register(tape)).collect();
        for r in &readout {
            all.extend([r.w_last, r.w_node, r.q, r.c, r.w_out]);
        }
        let w_fuse = tape.leaf(&self.w_fuse);
        let log_gamma = tape.leaf(&self.log_gamma);
        all.extend([w_fuse, log_gamma]);
        ModelVars {
            item_embeddings,
            attribute_proj,
            gru,
            readout,
            w_fuse,
            log_gamma,
            all,
        }
    }
}

/// [`ModelParams`] recorded on a tape.
#[derive(Clone, Debug)]
pub struct ModelVars {
    pub item_embeddings: Var,
    pub attribute_proj: Vec<Var>,
    pub gru: Vec<GruVars>,
    pub readout: Vec<ReadoutVars>,
    pub w_fuse: Var,
    pub log_gamma: Var,
    /// Every leaf in [`ModelParams::named`] order.
    pub all: Vec<Var>,
}
