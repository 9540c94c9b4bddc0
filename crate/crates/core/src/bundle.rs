//! On-disk dataset bundle: a directory holding the preprocessed split.
//!
//! ```text
//! manifest.json    format version, preprocessing settings, summary counts
//! items.csv        item ids in vocabulary order
//! train.csv        training sessions
//! test.csv         test sessions, restricted to training items
//! attributes.csv   item attribute values
//! ```
//!
//! The CSV files use the default [`FormatConfig`] layout, so they can be
//! fed back to the parsers directly.

use crate::data::{
    augment_prefixes, parse_attributes, parse_sessions, write_attributes, write_sessions,
    AttributeTable, DataError, FormatConfig, Session, SessionSet, Split, Vocabulary,
};
use serde::{Deserialize, Serialize};
use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

pub const BUNDLE_VERSION: u32 = 1;
pub const MANIFEST: &str = "manifest.json";
pub const ITEMS: &str = "items.csv";
pub const TRAIN: &str = "train.csv";
pub const TEST: &str = "test.csv";
pub const ATTRIBUTES: &str = "attributes.csv";

#[derive(Debug, thiserror::Error)]
pub enum BundleError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("{path}: {source}")]
    Data { path: PathBuf, source: DataError },
    #[error("{path}: malformed manifest: {message}")]
    Manifest { path: PathBuf, message: String },
    #[error("{path}: bundle version {found} is not supported (expected {expected})")]
    Version {
        path: PathBuf,
        found: u32,
        expected: u32,
    },
    #[error("{path}: {message}")]
    Inconsistent { path: PathBuf, message: String },
}

pub type Result<T, E = BundleError> = std::result::Result<T, E>;

/// Preprocessing applied when the bundle was built.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessing {
    pub min_item_count: usize,
    pub min_session_len: usize,
    /// `None` when filtering ran to a fixpoint.
    pub filter_passes: Option<usize>,
    /// Seconds of the trailing test window.
    pub holdout_seconds: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AttributeSummary {
    pub name: String,
    pub values: usize,
}

/// Dataset statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub items: usize,
    pub train_sessions: usize,
    pub test_sessions: usize,
    pub train_examples: usize,
    pub test_examples: usize,
    pub clicks: usize,
    /// Mean session length over train and test.
    pub average_length: f64,
    /// Test interactions removed because their item never occurs in training.
    pub dropped_unseen: usize,
    /// Attribute rows skipped because their item is not a training item.
    pub skipped_attribute_rows: usize,
    pub attributes: Vec<AttributeSummary>,
}

impl Summary {
    pub fn to_text(&self) -> String {
        let mut out = format!(
            "items            {}\ntrain sessions   {}\ntest sessions    {}\n\
             train examples   {}\ntest examples    {}\nclicks           {}\n\
             average length   {:.2}\n",
            self.items,
            self.train_sessions,
            self.test_sessions,
            self.train_examples,
            self.test_examples,
            self.clicks,
            self.average_length
        );
        if self.dropped_unseen > 0 {
            out.push_str(&format!("dropped unseen   {}\n", self.dropped_unseen));
        }
        if self.skipped_attribute_rows > 0 {
            out.push_str(&format!(
                "skipped attrs    {}\n",
                self.skipped_attribute_rows
            ));
        }
        for a in &self.attributes {
            out.push_str(&format!("attribute {:<6} {} values\n", a.name, a.values));
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub preprocessing: Preprocessing,
    pub summary: Summary,
}

/// A preprocessed train/test split with its attribute table. Test sessions
/// and attributes are indexed by the training vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Bundle {
    pub manifest: Manifest,
    pub train: SessionSet,
    pub test: SessionSet,
    pub attributes: AttributeTable,
}

impl Bundle {
    pub fn new(
        split: Split,
        attributes: AttributeTable,
        skipped_attribute_rows: usize,
        preprocessing: Preprocessing,
    ) -> Self {
        let Split {
            train,
            test,
            dropped_unseen,
        } = split;
        let clicks = train.interactions() + test.interactions();
        let sessions = train.len() + test.len();
        let summary = Summary {
            items: train.num_items(),
            train_sessions: train.len(),
            test_sessions: test.len(),
            train_examples: train
                .sessions
                .iter()
                .map(|s| s.len().saturating_sub(1))
                .sum(),
            test_examples: test
                .sessions
                .iter()
                .map(|s| s.len().saturating_sub(1))
                .sum(),
            clicks,
            average_length: if sessions == 0 {
                0.0
            } else {
                clicks as f64 / sessions as f64
            },
            dropped_unseen,
            skipped_attribute_rows,
            attributes: attributes
                .attributes
                .iter()
                .map(|a| AttributeSummary {
                    name: a.name.clone(),
                    values: a.num_values(),
                })
                .collect(),
        };
        Bundle {
            manifest: Manifest {
                version: BUNDLE_VERSION,
                preprocessing,
                summary,
            },
            train,
            test,
            attributes,
        }
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.train.vocab
    }

    pub fn train_examples(&self) -> Vec<crate::data::TrainingExample> {
        augment_prefixes(&self.train)
    }

    pub fn test_examples(&self) -> Vec<crate::data::TrainingExample> {
        augment_prefixes(&self.test)
    }

    /// Writes every file of the bundle into `dir`, creating it if needed.
    pub fn save(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|source| BundleError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let format = FormatConfig::default();
        write_file(&dir.join(MANIFEST), |w| {
            serde_json::to_writer_pretty(&mut *w, &self.manifest).map_err(io::Error::from)?;
            w.write_all(b"\n")?;
            Ok(())
        })?;
        write_file(&dir.join(ITEMS), |w| {
            let mut csv = csv::Writer::from_writer(w);
            csv.write_record([&format.item_column])?;
            for id in self.train.vocab.iter() {
                csv.write_record([id])?;
            }
            csv.flush()
        })?;
        for (name, set) in [(TRAIN, &self.train), (TEST, &self.test)] {
            let path = dir.join(name);
            write_file(&path, |w| write_sessions(set, w, &format).map_err(to_io))?;
        }
        write_file(&dir.join(ATTRIBUTES), |w| {
            write_attributes(&self.attributes, &self.train.vocab, w, &format).map_err(to_io)
        })?;
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let format = FormatConfig::default();
        let path = dir.join(MANIFEST);
        let manifest: Manifest =
            serde_json::from_reader(open(&path)?).map_err(|e| BundleError::Manifest {
                path: path.clone(),
                message: e.to_string(),
            })?;
        if manifest.version != BUNDLE_VERSION {
            return Err(BundleError::Version {
                path,
                found: manifest.version,
                expected: BUNDLE_VERSION,
            });
        }

        let path = dir.join(ITEMS);
        let mut vocab = Vocabulary::new();
        let mut reader = csv::ReaderBuilder::new().from_reader(open(&path)?);
        for record in reader.records() {
            let record = record.map_err(|e| BundleError::Data {
                path: path.clone(),
                source: e.into(),
            })?;
            let id = record.get(0).unwrap_or_default();
            if vocab.index_of(id).is_some() {
                return Err(BundleError::Inconsistent {
                    path,
                    message: format!("duplicate item {id:?}"),
                });
            }
            vocab.intern(id);
        }

        let train = read_sessions(&dir.join(TRAIN), &vocab, &format)?;
        let test = read_sessions(&dir.join(TEST), &vocab, &format)?;
        let path = dir.join(ATTRIBUTES);
        let parsed = parse_attributes(open(&path)?, &format, &vocab).map_err(|source| {
            BundleError::Data {
                path: path.clone(),
                source,
            }
        })?;
        if parsed.skipped_rows > 0 {
            return Err(BundleError::Inconsistent {
                path,
                message: format!("{} rows name items outside items.csv", parsed.skipped_rows),
            });
        }
        Ok(Bundle {
            manifest,
            train,
            test,
            attributes: parsed.table,
        })
    }
}

fn to_io(e: DataError) -> io::Error {
    match e {
        DataError::Io(e) => e,
        other => io::Error::other(other),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| BundleError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn write_file(
    path: &Path,
    body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
) -> Result<()> {
    let err = |source| BundleError::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut w = BufWriter::new(File::create(path).map_err(err)?);
    body(&mut w).map_err(err)?;
    w.flush().map_err(err)
}

/// Parses a sessions file and re-keys it to `vocab`.
fn read_sessions(path: &Path, vocab: &Vocabulary, format: &FormatConfig) -> Result<SessionSet> {
    let raw = parse_sessions(open(path)?, format).map_err(|source| BundleError::Data {
        path: path.to_path_buf(),
        source,
    })?;
    let sessions = raw
        .sessions
        .into_iter()
        .map(|s| {
            let items = s
                .items
                .iter()
                .map(|&i| {
                    let id = raw.vocab.id(i).expect("index within vocabulary");
                    vocab.index_of(id).ok_or_else(|| BundleError::Inconsistent {
                        path: path.to_path_buf(),
                        message: format!("item {id:?} is not listed in items.csv"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Session {
                id: s.id,
                items,
                times: s.times,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SessionSet {
        sessions,
        vocab: vocab.clone(),
    })
}
