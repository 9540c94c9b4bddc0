use super::{column, parse_timestamp, record_line, DataError, FormatConfig, Result};
use indexmap::{IndexMap, IndexSet};
use serde::{Deserialize, Serialize};
use std::io;

/// Dense mapping between external item ids and indices `0..len`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Vocabulary {
    ids: IndexSet<String>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_ids<I: IntoIterator<Item = S>, S: Into<String>>(ids: I) -> Self {
        Vocabulary {
            ids: ids.into_iter().map(Into::into).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// Returns the index of `id`, inserting it at the end if new.
    pub fn intern(&mut self, id: &str) -> usize {
        match self.ids.get_index_of(id) {
            Some(i) => i,
            None => self.ids.insert_full(id.to_string()).0,
        }
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.ids.get_index_of(id)
    }

    pub fn id(&self, index: usize) -> Option<&str> {
        self.ids.get_index(index).map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.ids.iter().map(String::as_str)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Session {
    pub id: String,
    pub items: Vec<usize>,
    pub times: Vec<f64>,
}

impl Session {
    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn last_time(&self) -> f64 {
        self.times.last().copied().unwrap_or(f64::NEG_INFINITY)
    }
}

/// Time-ordered interaction sequences over a shared item vocabulary.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SessionSet {
    pub sessions: Vec<Session>,
    pub vocab: Vocabulary,
}

impl SessionSet {
    pub fn len(&self) -> usize {
        self.sessions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sessions.is_empty()
    }

    pub fn num_items(&self) -> usize {
        self.vocab.len()
    }

    pub fn interactions(&self) -> usize {
        self.sessions.iter().map(Session::len).sum()
    }

    pub fn average_length(&self) -> f64 {
        if self.sessions.is_empty() {
            0.0
        } else {
            self.interactions() as f64 / self.sessions.len() as f64
        }
    }

    /// Occurrence count of every item index.
    pub fn item_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.vocab.len()];
        for s in &self.sessions {
            for &i in &s.items {
                counts[i] += 1;
            }
        }
        counts
    }

    /// Drops items not in `keep`, drops empty sessions and re-indexes the
    /// vocabulary densely in first-appearance order.
    fn rebuild(&self, keep: impl Fn(usize) -> bool) -> SessionSet {
        let mut vocab = Vocabulary::new();
        let mut sessions = Vec::with_capacity(self.sessions.len());
        for s in &self.sessions {
            let mut items = Vec::with_capacity(s.len());
            let mut times = Vec::with_capacity(s.len());
            for (&i, &t) in s.items.iter().zip(&s.times) {
                if keep(i) {
                    let id = self.vocab.id(i).expect("index within vocabulary");
                    items.push(vocab.intern(id));
                    times.push(t);
                }
            }
            if !items.is_empty() {
                sessions.push(Session {
                    id: s.id.clone(),
                    items,
                    times,
                });
            }
        }
        SessionSet { sessions, vocab }
    }

    /// Keeps only sessions satisfying `pred`, without touching the vocabulary.
    fn retain_sessions(&self, pred: impl Fn(&Session) -> bool) -> SessionSet {
        SessionSet {
            sessions: self.sessions.iter().filter(|s| pred(s)).cloned().collect(),
            vocab: self.vocab.clone(),
        }
    }
}

/// Reads `(session, item, timestamp)` rows.
///
/// Rows are grouped by session id (sessions ordered by first appearance),
/// sorted by timestamp with ties kept in file order, and items are indexed
/// in order of first appearance across the grouped sessions.
pub fn parse_sessions<R: io::Read>(input: R, format: &FormatConfig) -> Result<SessionSet> {
    let mut reader = format.reader(input);
    let headers = match reader.headers() {
        Ok(h) => h.clone(),
        Err(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => return Err(e.into()),
        Err(e) => return Err(e.into()),
    };
    if headers.is_empty() {
        return Ok(SessionSet::default());
    }
    let sc = column(&headers, &format.session_column)?;
    let ic = column(&headers, &format.item_column)?;
    let tc = column(&headers, &format.time_column)?;

    let mut grouped: IndexMap<String, Vec<(f64, String)>> = IndexMap::new();
    for record in reader.records() {
        let record = record.map_err(|e| match e.position() {
            Some(p) => DataError::Malformed {
                line: p.line(),
                message: e.to_string(),
            },
            None => DataError::Csv(e),
        })?;
        let line = record_line(&record);
        let field = |c: usize, name: &str| {
            record
                .get(c)
                .filter(|v| !v.is_empty())
                .ok_or_else(|| DataError::Malformed {
                    line,
                    message: format!("missing {name}"),
                })
        };
        let session = field(sc, &format.session_column)?;
        let item = field(ic, &format.item_column)?;
        let raw_time = field(tc, &format.time_column)?;
        let time = parse_timestamp(raw_time).ok_or_else(|| DataError::Timestamp {
            line,
            value: raw_time.to_string(),
        })?;
        grouped
            .entry(session.to_string())
            .or_default()
            .push((time, item.to_string()));
    }

    let mut vocab = Vocabulary::new();
    let sessions = grouped
        .into_iter()
        .map(|(id, mut rows)| {
            // stable: equal timestamps keep file order
            rows.sort_by(|a, b| a.0.total_cmp(&b.0));
            let (times, items) = rows
                .into_iter()
                .map(|(t, item)| (t, vocab.intern(&item)))
                .unzip();
            Session { id, items, times }
        })
        .collect();
    Ok(SessionSet { sessions, vocab })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FilterPasses {
    /// Repeat until neither rule removes anything.
    Fixpoint,
    /// At most this many item-then-session passes.
    Limit(usize),
}

/// Removes items occurring fewer than `min_item_count` times, then sessions
/// shorter than `min_session_len`, repeating per `passes`.
pub fn preprocess(
    set: &SessionSet,
    min_item_count: usize,
    min_session_len: usize,
    passes: FilterPasses,
) -> SessionSet {
    let max_passes = match passes {
        FilterPasses::Fixpoint => usize::MAX,
        FilterPasses::Limit(n) => n,
    };
    let mut current = set.rebuild(|_| true);
    let mut pass = 0;
    while pass < max_passes {
        pass += 1;
        let counts = current.item_counts();
        let before = (current.len(), current.interactions());
        let filtered = current
            .rebuild(|i| counts[i] >= min_item_count)
            .retain_sessions(|s| s.len() >= min_session_len);
        current = filtered.rebuild(|_| true);
        if (current.len(), current.interactions()) == before {
            break;
        }
    }
    current
}

/// Splits sessions by their final timestamp: those ending strictly after
/// `max_time - holdout` form the second set. Both keep the input vocabulary.
pub fn partition_by_time(set: &SessionSet, holdout: f64) -> (SessionSet, SessionSet) {
    let Some(max_time) = set.sessions.iter().map(Session::last_time).reduce(f64::max) else {
        return (set.clone(), set.retain_sessions(|_| false));
    };
    let threshold = max_time - holdout;
    let first_end = set
        .sessions
        .iter()
        .map(Session::last_time)
        .fold(f64::INFINITY, f64::min);
    if threshold < first_end {
        log::warn!("holdout of {holdout}s covers the whole data span; training set is empty");
    }
    (
        set.retain_sessions(|s| s.last_time() <= threshold),
        set.retain_sessions(|s| s.last_time() > threshold),
    )
}

/// Train/test split over the training vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Split {
    pub train: SessionSet,
    pub test: SessionSet,
    /// Test interactions removed because their item never occurs in training.
    pub dropped_unseen: usize,
}

/// Time-based split followed by test-side cleanup: items unseen in training
/// are removed from test sessions and test sessions left shorter than 2 are
/// dropped. Train is re-indexed densely; test shares the train vocabulary.
pub fn split_by_time(set: &SessionSet, holdout: f64) -> Split {
    let (train_raw, test_raw) = partition_by_time(set, holdout);
    let train = train_raw.rebuild(|_| true);
    let mut dropped_unseen = 0;
    let sessions = test_raw
        .sessions
        .iter()
        .filter_map(|s| {
            let mut items = Vec::new();
            let mut times = Vec::new();
            for (&i, &t) in s.items.iter().zip(&s.times) {
                let id = set.vocab.id(i).expect("index within vocabulary");
                match train.vocab.index_of(id) {
                    Some(j) => {
                        items.push(j);
                        times.push(t);
                    }
                    None => dropped_unseen += 1,
                }
            }
            (items.len() >= 2).then(|| Session {
                id: s.id.clone(),
                items,
                times,
            })
        })
        .collect();
    let test = SessionSet {
        sessions,
        vocab: train.vocab.clone(),
    };
    Split {
        train,
        test,
        dropped_unseen,
    }
}

/// Moves the `fraction` of sessions that end latest into a second set.
/// Both sets keep the input vocabulary.
pub fn holdout_latest(set: &SessionSet, fraction: f64) -> (SessionSet, SessionSet) {
    let n = set.len();
    let held = ((n as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        set.sessions[a]
            .last_time()
            .total_cmp(&set.sessions[b].last_time())
    });
    let mut is_held = vec![false; n];
    for &i in &order[n - held..] {
        is_held[i] = true;
    }
    let pick = |flag: bool| SessionSet {
        sessions: set
            .sessions
            .iter()
            .zip(&is_held)
            .filter(|(_, &h)| h == flag)
            .map(|(s, _)| s.clone())
            .collect(),
        vocab: set.vocab.clone(),
    };
    (pick(false), pick(true))
}

/// A prefix of a session and the item that followed it.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TrainingExample {
    pub prefix: Vec<usize>,
    pub label: usize,
}

/// Expands every session `[v1..vT]` into `([v1..vt], v(t+1))` for `t = 1..T-1`.
pub fn augment_prefixes(set: &SessionSet) -> Vec<TrainingExample> {
    set.sessions
        .iter()
        .flat_map(|s| {
            (1..s.len()).map(move |t| TrainingExample {
                prefix: s.items[..t].to_vec(),
                label: s.items[t],
            })
        })
        .collect()
}
