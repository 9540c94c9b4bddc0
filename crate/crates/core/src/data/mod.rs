//! Session logs, item attributes, preprocessing, splits and training examples.

mod attributes;
mod sessions;
mod timestamp;
mod write;

pub use attributes::{parse_attributes, Attribute, AttributeTable, ParsedAttributes};
pub use sessions::{
    augment_prefixes, holdout_latest, parse_sessions, partition_by_time, preprocess, split_by_time,
    FilterPasses, Session, SessionSet, Split, TrainingExample, Vocabulary,
};
pub use timestamp::{parse_duration, parse_timestamp};
pub use write::{write_attributes, write_sessions};

use std::io;

#[derive(Debug, thiserror::Error)]
pub enum DataError {
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: unparseable timestamp {value:?}")]
    Timestamp { line: u64, value: String },
    #[error("column {0:?} not found in header")]
    MissingColumn(String),
    #[error("unknown attribute index {index} (table has {count})")]
    UnknownAttribute { index: usize, count: usize },
    #[error("unknown attribute {0:?}")]
    UnknownAttributeName(String),
    #[error("unknown item id {0:?}")]
    UnknownItem(String),
    #[error("invalid duration {0:?}")]
    Duration(String),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = DataError> = std::result::Result<T, E>;

/// Column layout of a delimiter-separated input file with a header row.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FormatConfig {
    pub delimiter: u8,
    pub session_column: String,
    pub item_column: String,
    pub time_column: String,
    pub attribute_column: String,
    pub value_column: String,
}

impl Default for FormatConfig {
    fn default() -> Self {
        FormatConfig {
            delimiter: b',',
            session_column: "session_id".into(),
            item_column: "item_id".into(),
            time_column: "timestamp".into(),
            attribute_column: "attribute".into(),
            value_column: "value".into(),
        }
    }
}

impl FormatConfig {
    fn reader<R: io::Read>(&self, input: R) -> csv::Reader<R> {
        csv::ReaderBuilder::new()
            .delimiter(self.delimiter)
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(input)
    }
}

fn column(headers: &csv::StringRecord, name: &str) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .ok_or_else(|| DataError::MissingColumn(name.to_string()))
}

fn record_line(record: &csv::StringRecord) -> u64 {
    record.position().map_or(0, |p| p.line())
}
