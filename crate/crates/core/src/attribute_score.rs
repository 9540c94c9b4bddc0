//! Attribute importance: how concentrated an attribute's values are within
//! sessions.
//!
//! For one session the contribution is `1 - |distinct values| / total values`
//! over the session's items, so a session that keeps revisiting the same few
//! values scores close to 1 and one where every item brings new values scores
//! 0. The attribute score is the mean contribution over all sessions.

use crate::data::{AttributeTable, DataError, SessionSet};
use std::collections::HashSet;

#[derive(Debug, thiserror::Error)]
pub enum ScoreError {
    #[error("no sessions to score")]
    NoSessions,
    #[error(transparent)]
    Data(#[from] DataError),
}

/// What to do with sessions whose items carry no value for the attribute.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum EmptySessions {
    /// Count them with contribution 0.
    #[default]
    Zero,
    /// Leave them out of the average entirely.
    Skip,
}

/// One session's contribution for attribute `j`, or `None` if its items have no values.
pub fn session_component(items: &[usize], table: &AttributeTable, j: usize) -> Option<f64> {
    let attr = &table.attributes[j];
    let mut distinct = HashSet::new();
    let mut total = 0usize;
    for &item in items {
        let values = attr.of(item);
        total += values.len();
        distinct.extend(values.iter().copied());
    }
    (total > 0).then(|| 1.0 - distinct.len() as f64 / total as f64)
}

pub fn attribute_score(
    sessions: &SessionSet,
    table: &AttributeTable,
    j: usize,
    empty: EmptySessions,
) -> Result<f64, ScoreError> {
    table.get(j)?;
    if sessions.is_empty() {
        return Err(ScoreError::NoSessions);
    }
    let mut sum = 0.0;
    let mut counted = 0usize;
    for s in &sessions.sessions {
        match (session_component(&s.items, table, j), empty) {
            (Some(c), _) => {
                sum += c;
                counted += 1;
            }
            (None, EmptySessions::Zero) => counted += 1,
            (None, EmptySessions::Skip) => {}
        }
    }
    Ok(if counted == 0 {
        0.0
    } else {
        sum / counted as f64
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct AttributeScore {
    pub name: String,
    pub index: usize,
    pub score: f64,
}

/// Scores of every attribute, highest first (ties by name).
#[derive(Clone, Debug, PartialEq)]
pub struct AttributeScoreReport {
    pub scores: Vec<AttributeScore>,
}

impl AttributeScoreReport {
    /// Delimiter-separated `attribute<delim>score` rows with a header.
    pub fn to_delimited(&self, delimiter: char) -> String {
        let mut out = format!("attribute{delimiter}score\n");
        for s in &self.scores {
            out.push_str(&format!("{}{delimiter}{:.6}\n", s.name, s.score));
        }
        out
    }
}

pub fn rank_attributes(
    sessions: &SessionSet,
    table: &AttributeTable,
    empty: EmptySessions,
) -> Result<AttributeScoreReport, ScoreError> {
    let mut scores = table
        .attributes
        .iter()
        .enumerate()
        .map(|(j, a)| {
            Ok(AttributeScore {
                name: a.name.clone(),
                index: j,
                score: attribute_score(sessions, table, j, empty)?,
            })
        })
        .collect::<Result<Vec<_>, ScoreError>>()?;
    scores.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then_with(|| a.name.cmp(&b.name))
    });
    Ok(AttributeScoreReport { scores })
}
