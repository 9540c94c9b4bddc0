//! Seeded session corpora whose predictive structure is known by
//! construction.

use crate::data::{Attribute, AttributeTable, Session, SessionSet, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SyntheticError {
    #[error("invalid synthetic spec: {0}")]
    Invalid(String),
}

/// How each next item is drawn from the current one.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Signal {
    /// Uniform over all items.
    Random,
    /// Every item has one fixed successor, taken with probability `p`;
    /// otherwise uniform.
    Markov { p: f64 },
    /// With probability `p` uniform over the other items sharing the current
    /// item's value of `attribute`; otherwise uniform over all items.
    AttributeDriven { p: f64, attribute: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub num_items: usize,
    /// Number of distinct values of each attribute; its length is K.
    pub attribute_values: Vec<usize>,
    pub sessions: usize,
    /// Session lengths are uniform in `min_len..=max_len`.
    pub min_len: usize,
    pub max_len: usize,
    pub signal: Signal,
    pub seed: u64,
}

impl SyntheticSpec {
    fn validate(&self) -> Result<(), SyntheticError> {
        let bad = |m: String| Err(SyntheticError::Invalid(m));
        if self.num_items < 2 {
            return bad("at least 2 items required".into());
        }
        if self.min_len == 0 || self.min_len > self.max_len {
            return bad(format!(
                "bad length range {}..={}",
                self.min_len, self.max_len
            ));
        }
        if let Some(&c) = self
            .attribute_values
            .iter()
            .find(|&&c| c == 0 || c > self.num_items)
        {
            return bad(format!(
                "attribute cardinality {c} outside 1..={}",
                self.num_items
            ));
        }
        match self.signal {
            Signal::Markov { p } | Signal::AttributeDriven { p, .. }
                if !(0.0..=1.0).contains(&p) =>
            {
                bad(format!("probability {p} outside [0, 1]"))
            }
            Signal::AttributeDriven { attribute, .. }
                if attribute >= self.attribute_values.len() =>
            {
                bad(format!("signal attribute {attribute} does not exist"))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticCorpus {
    pub sessions: SessionSet,
    pub attributes: AttributeTable,
    /// The successor table of a Markov corpus.
    pub successors: Option<Vec<usize>>,
}

pub fn item_id(i: usize) -> String {
    format!("i{i}")
}

/// Generates the corpus of `spec`; equal specs give identical corpora.
///
/// Items are `i0, i1, ...` with vocabulary index equal to the number.
/// Attribute `j` is named `attr{j}` and is single-valued, with its values
/// spread over the items as evenly as possible. Session `s` starts at time
/// `600 s` and its interactions are one minute apart, so later sessions end
/// later.
pub fn generate(spec: &SyntheticSpec) -> Result<SyntheticCorpus, SyntheticError> {
    spec.validate()?;
    let n = spec.num_items;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut attributes = AttributeTable::empty(n);
    let mut value_of: Vec<Vec<usize>> = Vec::new();
    for (j, &card) in spec.attribute_values.iter().enumerate() {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut values = vec![0; n];
        for (pos, &i) in order.iter().enumerate() {
            values[i] = pos % card;
        }
        let mut attr = Attribute::new(format!("attr{j}"), n);
        for v in 0..card {
            attr.values.insert(format!("a{j}v{v}"));
        }
        for (i, &v) in values.iter().enumerate() {
            attr.item_values[i] = vec![v];
        }
        attributes.attributes.push(attr);
        value_of.push(values);
    }

    let successors = matches!(spec.signal, Signal::Markov { .. }).then(|| {
        (0..n)
            .map(|i| {
                let s = rng.gen_range(0..n - 1);
                if s >= i {
                    s + 1
                } else {
                    s
                }
            })
            .collect::<Vec<usize>>()
    });
    let groups: Vec<Vec<usize>> = match spec.signal {
        Signal::AttributeDriven { attribute, .. } => {
            let mut g = vec![Vec::new(); spec.attribute_values[attribute]];
            for i in 0..n {
                g[value_of[attribute][i]].push(i);
            }
            g
        }
        _ => Vec::new(),
    };

    let mut sessions = Vec::with_capacity(spec.sessions);
    for s in 0..spec.sessions {
        let len = rng.gen_range(spec.min_len..=spec.max_len);
        let mut items = vec![rng.gen_range(0..n)];
        while items.len() < len {
            let cur = *items.last().unwrap();
            let next = match spec.signal {
                Signal::Random => rng.gen_range(0..n),
                Signal::Markov { p } => {
                    if rng.gen_bool(p) {
                        successors.as_ref().unwrap()[cur]
                    } else {
                        rng.gen_range(0..n)
                    }
                }
                Signal::AttributeDriven { p, attribute } => {
                    let group = &groups[value_of[attribute][cur]];
                    if group.len() > 1 && rng.gen_bool(p) {
                        let k = rng.gen_range(0..group.len() - 1);
                        let pos = group.iter().position(|&i| i == cur).unwrap();
                        group[if k >= pos { k + 1 } else { k }]
                    } else {
                        rng.gen_range(0..n)
                    }
                }
            };
            items.push(next);
        }
        let start = 600.0 * s as f64;
        sessions.push(Session {
            id: format!("s{s}"),
            times: (0..items.len()).map(|t| start + 60.0 * t as f64).collect(),
            items,
        });
    }
    Ok(SyntheticCorpus {
        sessions: SessionSet {
            sessions,
            vocab: Vocabulary::from_ids((0..n).map(item_id)),
        },
        attributes,
        successors,
    })
}
