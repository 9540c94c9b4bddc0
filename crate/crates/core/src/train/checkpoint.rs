//! Versioned binary checkpoint container.
//!
//! ```text
//! offset 0   8 bytes   magic "MURZCKPT"
//!        8   u32 LE    format version
//!       12   u8        float width in bits (32 or 64)
//!       13   u64 LE    header length H
//!       21   H bytes   JSON header
//!   21 + H   ...       parameters, then Adam first and second moments,
//!                      little-endian floats in header tensor order
//!  end - 32  32 bytes  SHA-256 of everything before it
//! ```

use super::adam::AdamState;
use super::{EpochRecord, TrainConfig};
use crate::data::{AttributeTable, Vocabulary};
use crate::model::{Model, ModelConfig, ModelError, ModelParams};
use crate::tensor::{Precision, Scalar, Shape, Tensor};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::Path;

pub const MAGIC: &[u8; 8] = b"MURZCKPT";
pub const FORMAT_VERSION: u32 = 1;
const PREAMBLE: usize = 8 + 4 + 1 + 8;
const DIGEST: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum CheckpointError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("offset 0: not a checkpoint file (bad magic)")]
    BadMagic,
    #[error("offset 8: unsupported checkpoint version {found} (expected {expected})")]
    Version { found: u32, expected: u32 },
    #[error("offset 12: invalid float width {0}")]
    FloatWidth(u8),
    #[error("checkpoint holds {found} floats but {expected} was requested")]
    Precision {
        found: Precision,
        expected: Precision,
    },
    #[error("truncated at offset {offset}: {needed} bytes required")]
    Truncated { offset: usize, needed: usize },
    #[error("offset {offset}: checksum mismatch")]
    Checksum { offset: usize },
    #[error("offset {offset}: malformed header: {message}")]
    Header { offset: usize, message: String },
    #[error("checkpoint has dimension {found}, requested {requested}; tensors: {shapes}")]
    Dimension {
        requested: usize,
        found: usize,
        shapes: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

pub type Result<T, E = CheckpointError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TensorEntry {
    pub name: String,
    pub shape: Shape,
}

/// Shuffle stream position: epoch `e` shuffles with stream `e` of `seed`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: u64,
    pub next_epoch: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    train_config: TrainConfig,
    model_config: ModelConfig,
    vocabulary: Vocabulary,
    attributes: AttributeTable,
    epoch: usize,
    best_epoch: Option<usize>,
    rng: RngState,
    adam_steps: u64,
    history: Vec<EpochRecord>,
    tensors: Vec<TensorEntry>,
}

/// Everything needed to score with, evaluate, or continue training a model.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint<T> {
    pub train_config: TrainConfig,
    pub model: Model<T>,
    pub vocabulary: Vocabulary,
    /// Selected attributes, keyed by this vocabulary.
    pub attributes: AttributeTable,
    pub adam: AdamState<T>,
    /// Epochs completed.
    pub epoch: usize,
    /// Epoch whose parameters these are, when selected by validation.
    pub best_epoch: Option<usize>,
    pub rng: RngState,
    pub history: Vec<EpochRecord>,
}

impl<T: Scalar> Checkpoint<T> {
    pub fn to_bytes(&self) -> Vec<u8> {
        let named = self.model.params.named();
        let header = Header {
            train_config: self.train_config.clone(),
            model_config: self.model.config.clone(),
            vocabulary: self.vocabulary.clone(),
            attributes: self.attributes.clone(),
            epoch: self.epoch,
            best_epoch: self.best_epoch,
            rng: self.rng,
            adam_steps: self.adam.t,
            history: self.history.clone(),
            tensors: named
                .iter()
                .map(|(n, t)| TensorEntry {
                    name: n.clone(),
                    shape: t.shape(),
                })
                .collect(),
        };
        let json = serde_json::to_vec(&header).expect("header serializes");
        let mut out =
            Vec::with_capacity(PREAMBLE + json.len() + 3 * 8 * self.model.params.num_scalars());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.push(T::PRECISION.bits() as u8);
        out.extend_from_slice(&(json.len() as u64).to_le_bytes());
        out.extend_from_slice(&json);
        for (_, t) in &named {
            for &x in t.data() {
                x.write_le(&mut out);
            }
        }
        for buf in self.adam.m.iter().chain(&self.adam.v) {
            for &x in buf {
                x.write_le(&mut out);
            }
        }
        let digest = Sha256::digest(&out);
        out.extend_from_slice(&digest);
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (precision, header, body) = parse_preamble(bytes)?;
        if precision != T::PRECISION {
            return Err(CheckpointError::Precision {
                found: precision,
                expected: T::PRECISION,
            });
        }
        let width = precision.bytes();
        let floats: usize = header.tensors.iter().map(|e| e.shape.len()).sum();
        let needed = body + 3 * floats * width + DIGEST;
        if bytes.len() < needed {
            return Err(CheckpointError::Truncated {
                offset: bytes.len(),
                needed,
            });
        }
        let end = needed - DIGEST;
        if Sha256::digest(&bytes[..end]).as_slice() != &bytes[end..needed] {
            return Err(CheckpointError::Checksum { offset: end });
        }
        if bytes.len() > needed {
            return Err(CheckpointError::Header {
                offset: needed,
                message: format!("{} trailing bytes", bytes.len() - needed),
            });
        }
        let mut cursor = body;
        let mut read = |len: usize| -> Vec<T> {
            let out = bytes[cursor..cursor + len * width]
                .chunks_exact(width)
                .map(T::read_le)
                .collect();
            cursor += len * width;
            out
        };
        let mut params = ModelParams::<T>::zeros(&header.model_config);
        let slots = params.named_mut();
        if slots.len() != header.tensors.len() {
            return Err(CheckpointError::Header {
                offset: PREAMBLE,
                message: format!(
                    "{} tensors listed, configuration implies {}",
                    header.tensors.len(),
                    slots.len()
                ),
            });
        }
        for ((name, slot), entry) in slots.into_iter().zip(&header.tensors) {
            if name != entry.name || slot.shape() != entry.shape {
                return Err(ModelError::ParamShape {
                    name: entry.name.clone(),
                    expected: slot.shape(),
                    found: entry.shape,
                }
                .into());
            }
            *slot = Tensor::from_vec(entry.shape, read(entry.shape.len()))
                .expect("length follows shape");
        }
        let sizes: Vec<usize> = header.tensors.iter().map(|e| e.shape.len()).collect();
        let m = sizes.iter().map(|&n| read(n)).collect();
        let v = sizes.iter().map(|&n| read(n)).collect();
        let model = Model::from_params(header.model_config, params)?;
        Ok(Checkpoint {
            train_config: header.train_config,
            model,
            vocabulary: header.vocabulary,
            attributes: header.attributes,
            adam: AdamState {
                t: header.adam_steps,
                m,
                v,
            },
            epoch: header.epoch,
            best_epoch: header.best_epoch,
            rng: header.rng,
            history: header.history,
        })
    }

    /// Writes to a temporary file beside `path` and renames it into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        let io = |source| CheckpointError::Io {
            path: path.display().to_string(),
            source,
        };
        let dir = match path.parent() {
            Some(p) if !p.as_os_str().is_empty() => p,
            _ => Path::new("."),
        };
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
        tmp.write_all(&self.to_bytes()).map_err(io)?;
        tmp.as_file().sync_all().map_err(io)?;
        tmp.persist(path).map_err(|e| io(e.error))?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }

    /// Rejects a checkpoint whose embedding dimension differs from `requested`.
    pub fn expect_dim(&self, requested: usize) -> Result<()> {
        let found = self.model.config.dim;
        if found == requested {
            return Ok(());
        }
        let shapes = self
            .model
            .params
            .named()
            .iter()
            .map(|(n, t)| format!("{n} {}", t.shape()))
            .collect::<Vec<_>>()
            .join(", ");
        Err(CheckpointError::Dimension {
            requested,
            found,
            shapes,
        })
    }
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    std::fs::read(path).map_err(|source| CheckpointError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Validates the fixed preamble and header; returns the precision, the
/// header and the offset where the float blobs start.
fn parse_preamble(bytes: &[u8]) -> Result<(Precision, Header, usize)> {
    if bytes.len() < 8 || &bytes[..8] != MAGIC {
        return Err(if bytes.len() < 8 && MAGIC.starts_with(bytes) {
            CheckpointError::Truncated {
                offset: bytes.len(),
                needed: PREAMBLE,
            }
        } else {
            CheckpointError::BadMagic
        });
    }
    if bytes.len() < PREAMBLE {
        return Err(CheckpointError::Truncated {
            offset: bytes.len(),
            needed: PREAMBLE,
        });
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(CheckpointError::Version {
            found: version,
            expected: FORMAT_VERSION,
        });
    }
    let precision =
        Precision::from_bits(bytes[12] as u32).ok_or(CheckpointError::FloatWidth(bytes[12]))?;
    let len = u64::from_le_bytes(bytes[13..21].try_into().unwrap()) as usize;
    let body = PREAMBLE.checked_add(len).ok_or(CheckpointError::Header {
        offset: 13,
        message: "header length overflows".into(),
    })?;
    if bytes.len() < body {
        return Err(CheckpointError::Truncated {
            offset: bytes.len(),
            needed: body,
        });
    }
    let header: Header =
        serde_json::from_slice(&bytes[PREAMBLE..body]).map_err(|e| CheckpointError::Header {
            offset: PREAMBLE + e.column().saturating_sub(1),
            message: e.to_string(),
        })?;
    Ok((precision, header, body))
}

/// A checkpoint of either float width.
#[derive(Clone, Debug, PartialEq)]
pub enum AnyCheckpoint {
    F32(Checkpoint<f32>),
    F64(Checkpoint<f64>),
}

impl AnyCheckpoint {
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let (precision, _, _) = parse_preamble(bytes)?;
        Ok(match precision {
            Precision::F32 => AnyCheckpoint::F32(Checkpoint::from_bytes(bytes)?),
            Precision::F64 => AnyCheckpoint::F64(Checkpoint::from_bytes(bytes)?),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_bytes(&read_file(path)?)
    }

    pub fn precision(&self) -> Precision {
        match self {
            AnyCheckpoint::F32(_) => Precision::F32,
            AnyCheckpoint::F64(_) => Precision::F64,
        }
    }
}
