//! Ranking metrics, evaluation reports and the non-neural baselines.

mod baselines;

pub use baselines::{ItemKnn, KnnWeighting, Pop, Ranker, SPop};

use crate::data::{AttributeTable, TrainingExample};
use crate::graph::{batch_graphs, ExampleGraphs, GraphError, GraphOptions};
use crate::model::{Model, ModelError};
use crate::tensor::Scalar;
use std::cmp::Ordering;
use std::fmt::Write as _;

#[derive(Debug, thiserror::Error)]
pub enum EvalError {
    #[error("{lists} ranked lists but {labels} labels")]
    LengthMismatch { lists: usize, labels: usize },
    #[error("cutoff K must be at least 1")]
    ZeroCutoff,
    #[error("no examples to evaluate")]
    NoExamples,
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

fn check(lists: usize, labels: usize, k: usize) -> Result<()> {
    if k == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    if lists != labels {
        return Err(EvalError::LengthMismatch { lists, labels });
    }
    Ok(())
}

/// 1-based position of `label` within the first `k` entries of `ranked`.
pub fn rank_within(ranked: &[usize], label: usize, k: usize) -> Option<usize> {
    ranked
        .iter()
        .take(k)
        .position(|&i| i == label)
        .map(|p| p + 1)
}

/// Fraction of examples whose label is among the top `k`.
pub fn recall_at_k(ranked: &[Vec<usize>], labels: &[usize], k: usize) -> Result<f64> {
    check(ranked.len(), labels.len(), k)?;
    if labels.is_empty() {
        return Ok(0.0);
    }
    let hits = ranked
        .iter()
        .zip(labels)
        .filter(|(r, &l)| rank_within(r, l, k).is_some())
        .count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mean of `1/rank` over examples, counting ranks beyond `k` as 0.
pub fn mrr_at_k(ranked: &[Vec<usize>], labels: &[usize], k: usize) -> Result<f64> {
    check(ranked.len(), labels.len(), k)?;
    if labels.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = ranked
        .iter()
        .zip(labels)
        .filter_map(|(r, &l)| rank_within(r, l, k))
        .map(|r| 1.0 / r as f64)
        .sum();
    Ok(total / labels.len() as f64)
}

/// Descending score order `a` before `b`; equal scores go by ascending index.
fn before(scores_a: f64, a: usize, scores_b: f64, b: usize) -> Ordering {
    scores_b.total_cmp(&scores_a).then(a.cmp(&b))
}

/// Item indices by descending score, ties by ascending index.
pub fn rank_items<T: Scalar>(scores: &[T]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| before(scores[a].as_f64(), a, scores[b].as_f64(), b));
    order
}

/// The first `k` entries of [`rank_items`] without sorting the rest.
pub fn top_k<T: Scalar>(scores: &[T], k: usize) -> Vec<usize> {
    let k = k.min(scores.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    let cmp = |&a: &usize, &b: &usize| before(scores[a].as_f64(), a, scores[b].as_f64(), b);
    if k > 0 && k < order.len() {
        order.select_nth_unstable_by(k - 1, cmp);
        order.truncate(k);
    }
    order.sort_by(cmp);
    order
}

/// 1-based position `label` would take in [`rank_items`].
pub fn rank_of<T: Scalar>(scores: &[T], label: usize) -> usize {
    let s = scores[label].as_f64();
    1 + scores
        .iter()
        .enumerate()
        .filter(|&(j, v)| before(v.as_f64(), j, s, label) == Ordering::Less)
        .count()
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalReport {
    pub name: String,
    pub k: usize,
    pub recall: f64,
    pub mrr: f64,
    pub count: usize,
    /// Per-example 1-based rank of the label, `None` when the ranker did not
    /// place it at all (baselines only list their top `k`).
    pub ranks: Vec<Option<usize>>,
}

impl EvalReport {
    pub fn from_ranks(name: impl Into<String>, k: usize, ranks: Vec<Option<usize>>) -> Self {
        let count = ranks.len();
        let within = || ranks.iter().flatten().filter(|&&r| r <= k);
        let (recall, mrr) = if count == 0 {
            (0.0, 0.0)
        } else {
            (
                within().count() as f64 / count as f64,
                within().map(|&r| 1.0 / r as f64).sum::<f64>() / count as f64,
            )
        };
        EvalReport {
            name: name.into(),
            k,
            recall,
            mrr,
            count,
            ranks,
        }
    }

    pub fn header(delimiter: char, k: usize) -> String {
        format!("model{delimiter}recall@{k}{delimiter}mrr@{k}{delimiter}examples")
    }

    pub fn row(&self, delimiter: char) -> String {
        format!(
            "{}{delimiter}{:.6}{delimiter}{:.6}{delimiter}{}",
            self.name, self.recall, self.mrr, self.count
        )
    }

    /// `example<delim>rank` rows; unranked examples get an empty rank field.
    pub fn per_example(&self, delimiter: char) -> String {
        let mut out = format!("example{delimiter}rank\n");
        for (i, r) in self.ranks.iter().enumerate() {
            match r {
                Some(r) => writeln!(out, "{i}{delimiter}{r}").unwrap(),
                None => writeln!(out, "{i}{delimiter}").unwrap(),
            }
        }
        out
    }
}

/// Reports as delimited rows under one header.
pub fn reports_to_delimited(reports: &[EvalReport], delimiter: char) -> String {
    let k = reports.first().map_or(20, |r| r.k);
    let mut out = EvalReport::header(delimiter, k);
    out.push('\n');
    for r in reports {
        out.push_str(&r.row(delimiter));
        out.push('\n');
    }
    out
}

/// Reports as an aligned, human-readable table with percentages.
pub fn reports_to_table(reports: &[EvalReport]) -> String {
    let k = reports.first().map_or(20, |r| r.k);
    let width = reports
        .iter()
        .map(|r| r.name.len())
        .max()
        .unwrap_or(5)
        .max(5);
    let recall = format!("Recall@{k}");
    let mrr = format!("MRR@{k}");
    let mut out = format!(
        "{:<width$}  {recall:>10}  {mrr:>10}  {:>8}\n",
        "model", "examples"
    );
    for r in reports {
        writeln!(
            out,
            "{:<width$}  {:>10.2}  {:>10.2}  {:>8}",
            r.name,
            100.0 * r.recall,
            100.0 * r.mrr,
            r.count
        )
        .unwrap();
    }
    out
}

pub fn evaluate_ranker<R: Ranker + ?Sized>(
    ranker: &R,
    examples: &[TrainingExample],
    k: usize,
) -> Result<EvalReport> {
    if k == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let ranks = examples
        .iter()
        .map(|e| rank_within(&ranker.rank(&e.prefix, k), e.label, k))
        .collect();
    Ok(EvalReport::from_ranks(ranker.name(), k, ranks))
}

/// Scores `examples` with `model` in chunks of `batch_size`, yielding each
/// example's full-vocabulary score row to `visit`.
pub fn score_examples<T: Scalar>(
    model: &Model<T>,
    table: &AttributeTable,
    options: GraphOptions,
    examples: &[TrainingExample],
    batch_size: usize,
    mut visit: impl FnMut(usize, &[T]),
) -> Result<()> {
    for (c, chunk) in examples.chunks(batch_size.max(1)).enumerate() {
        let graphs = chunk
            .iter()
            .map(|e| ExampleGraphs::build(&e.prefix, table, options))
            .collect::<Result<Vec<_>, _>>()?;
        let refs: Vec<&ExampleGraphs> = graphs.iter().collect();
        let labels: Vec<usize> = chunk.iter().map(|e| e.label).collect();
        let batch = batch_graphs(&refs, &labels)?;
        let logits = model.logits(&batch)?;
        for r in 0..chunk.len() {
            visit(c * batch_size.max(1) + r, logits.row(r));
        }
    }
    Ok(())
}

/// Recall@k and MRR@k of `model` on `examples`; ranks are over the full
/// vocabulary with the deterministic tie rule of [`rank_items`].
pub fn evaluate_model<T: Scalar>(
    name: &str,
    model: &Model<T>,
    table: &AttributeTable,
    options: GraphOptions,
    examples: &[TrainingExample],
    k: usize,
    batch_size: usize,
) -> Result<EvalReport> {
    if k == 0 {
        return Err(EvalError::ZeroCutoff);
    }
    let mut ranks = vec![None; examples.len()];
    score_examples(model, table, options, examples, batch_size, |i, scores| {
        ranks[i] = Some(rank_of(scores, examples[i].label));
    })?;
    Ok(EvalReport::from_ranks(name, k, ranks))
}

/// The `k` most probable next items after `prefix`, with probabilities.
pub fn recommend<T: Scalar>(
    model: &Model<T>,
    table: &AttributeTable,
    options: GraphOptions,
    prefix: &[usize],
    k: usize,
) -> Result<Vec<(usize, T)>> {
    let graphs = ExampleGraphs::build(prefix, table, options)?;
    let batch = batch_graphs(&[&graphs], &[0])?;
    let probs = model.forward(&batch)?.probs;
    let row = probs.row(0);
    Ok(top_k(row, k).into_iter().map(|i| (i, row[i])).collect())
}
