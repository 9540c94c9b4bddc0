//! The network's building blocks as free functions over a [`Tape`].
//!
//! Node embeddings of a [`ChannelBatch`] are stacked into one
//! `(batch * width) x d` matrix; padded rows are zero on entry and never
//! feed into real rows or into the pooled outputs.

use super::params::{AttributeInit, ReadoutVars};
use crate::graph::ChannelBatch;
use crate::tensor::{gru_cell, GruVars, Result, Scalar, SparseRows, Tape, Var};

fn adjacency<T: Scalar>(ch: &ChannelBatch, rows: &[Vec<(usize, f64)>]) -> SparseRows<T> {
    let n = ch.batch_size() * ch.width;
    let mut map = SparseRows::new(n);
    for (r, row) in rows.iter().enumerate() {
        let base = (r / ch.width) * ch.width;
        map.push_row(row.iter().map(|&(c, w)| (base + c, T::lit(w))));
    }
    map
}

/// Item node embeddings: the embedding row of each node's item.
pub fn item_node_embeddings<T: Scalar>(
    tape: &mut Tape<T>,
    items: Var,
    ch: &ChannelBatch,
) -> Result<Var> {
    let mut map = SparseRows::new(items.shape().rows);
    for nodes in &ch.nodes {
        for slot in 0..ch.width {
            match nodes.get(slot) {
                Some(&item) => map.push_row([(item, T::one())]),
                None => map.push_empty_row(),
            }
        }
    }
    tape.sparse(items, map)
}

/// Attribute value node embeddings from the item channel's initial node
/// embeddings: the projected item embeddings carrying each value, summed
/// and divided according to `init`.
pub fn attribute_node_embeddings<T: Scalar>(
    tape: &mut Tape<T>,
    item_nodes: Var,
    proj: Var,
    item_ch: &ChannelBatch,
    attr_ch: &ChannelBatch,
    members: &[Vec<Vec<usize>>],
    init: AttributeInit,
) -> Result<Var> {
    let projected = tape.matmul(item_nodes, proj)?;
    let mut map = SparseRows::new(item_ch.batch_size() * item_ch.width);
    for (b, per_value) in members.iter().enumerate() {
        for slot in 0..attr_ch.width {
            let Some(carriers) = per_value.get(slot) else {
                map.push_empty_row();
                continue;
            };
            let denom = match init {
                AttributeInit::SessionItems => item_ch.nodes[b].len(),
                AttributeInit::CarryingItems => carriers.len(),
            };
            let w = T::one() / T::lit(denom.max(1) as f64);
            map.push_row(carriers.iter().map(|&s| (b * item_ch.width + s, w)));
        }
    }
    tape.sparse(projected, map)
}

/// `steps` rounds of gated propagation: each node aggregates its in- and
/// out-neighbours, then a GRU merges the message into its state.
pub fn propagate<T: Scalar>(
    tape: &mut Tape<T>,
    nodes: Var,
    ch: &ChannelBatch,
    gru: &GruVars,
    steps: usize,
) -> Result<Var> {
    let m_in: SparseRows<T> = adjacency(ch, &ch.m_in);
    let m_out: SparseRows<T> = adjacency(ch, &ch.m_out);
    let mut h = nodes;
    for _ in 0..steps {
        let a_in = tape.sparse(h, m_in.clone())?;
        let a_out = tape.sparse(h, m_out.clone())?;
        let msg = tape.concat(&[a_in, a_out])?;
        h = gru_cell(tape, h, msg, gru)?;
    }
    Ok(h)
}

/// Soft-attention readout of one channel, `batch x d`.
///
/// The last-interacted node (averaged when several nodes share the last
/// position) queries every node; the attention-weighted sum is concatenated
/// with it and projected. Examples with no nodes yield zero rows.
pub fn sequence_embedding<T: Scalar>(
    tape: &mut Tape<T>,
    nodes: Var,
    ch: &ChannelBatch,
    p: &ReadoutVars,
) -> Result<Var> {
    let rows = ch.batch_size() * ch.width;
    let mut last = SparseRows::new(rows);
    let mut pool = SparseRows::new(rows);
    let mut spread = SparseRows::new(ch.batch_size());
    for b in 0..ch.batch_size() {
        let base = b * ch.width;
        let w = T::one() / T::lit(ch.last_slots[b].len().max(1) as f64);
        last.push_row(ch.last_slots[b].iter().map(|&s| (base + s, w)));
        pool.push_row((0..ch.nodes[b].len()).map(|s| (base + s, T::one())));
        for slot in 0..ch.width {
            if slot < ch.nodes[b].len() {
                spread.push_row([(b, T::one())]);
            } else {
                spread.push_empty_row();
            }
        }
    }
    let e_last = tape.sparse(nodes, last)?;
    let q_last = tape.matmul(e_last, p.w_last)?;
    let q_last = tape.sparse(q_last, spread)?;
    let k = tape.matmul(nodes, p.w_node)?;
    let pre = tape.add(q_last, k)?;
    let pre = tape.add_row(pre, p.c)?;
    let act = tape.sigmoid(pre);
    let alpha = tape.matmul(act, p.q)?;
    let weighted = tape.scale_rows(nodes, alpha)?;
    let pooled = tape.sparse(weighted, pool)?;
    let both = tape.concat(&[pooled, e_last])?;
    tape.matmul(both, p.w_out)
}

/// Bilinear gated fusion: `z = s0 + sum_j sigmoid(s0 W s_j^T / sqrt(d)) s_j`
/// over all channels including the item channel itself.
pub fn fuse_sequences<T: Scalar>(tape: &mut Tape<T>, seqs: &[Var], w: Var) -> Result<Var> {
    let s0 = seqs[0];
    let d = s0.shape().cols;
    let query = tape.matmul(s0, w)?;
    let mut z = s0;
    for &s in seqs {
        let prod = tape.mul(query, s)?;
        let dot = tape.row_sum(prod);
        let dot = tape.scale(dot, T::one() / T::lit(d as f64).sqrt());
        let gate = tape.sigmoid(dot);
        let term = tape.scale_rows(s, gate)?;
        z = tape.add(z, term)?;
    }
    Ok(z)
}

/// Temperature-scaled cosine logits of every item, `batch x |V|`.
pub fn item_logits<T: Scalar>(
    tape: &mut Tape<T>,
    z: Var,
    items: Var,
    log_gamma: Var,
) -> Result<Var> {
    let zn = tape.row_norm(z);
    let zn = tape.recip(zn);
    let zn = tape.scale_rows(z, zn)?;
    let vn = tape.row_norm(items);
    let vn = tape.recip(vn);
    let vn = tape.scale_rows(items, vn)?;
    let vt = tape.transpose(vn);
    let cos = tape.matmul(zn, vt)?;
    let gamma = tape.exp(log_gamma);
    tape.scale_by(cos, gamma)
}

/// Softmax over temperature-scaled cosine similarities.
pub fn score_items<T: Scalar>(
    tape: &mut Tape<T>,
    z: Var,
    items: Var,
    log_gamma: Var,
) -> Result<Var> {
    let logits = item_logits(tape, z, items, log_gamma)?;
    Ok(tape.softmax(logits))
}

/// Mean negative log-probability of `labels`.
pub fn cross_entropy<T: Scalar>(tape: &mut Tape<T>, probs: Var, labels: &[usize]) -> Result<Var> {
    let picked = tape.pick(probs, labels)?;
    let logs = tape.log(picked);
    let total = tape.sum(logs);
    Ok(tape.scale(total, -T::one() / T::lit(labels.len().max(1) as f64)))
}

/// `lambda * sum ||theta||^2` over `params`.
pub fn l2_penalty<T: Scalar>(tape: &mut Tape<T>, params: &[Var], lambda: T) -> Result<Var> {
    let mut acc: Option<Var> = None;
    for &p in params {
        let sq = tape.sum_squares(p);
        acc = Some(match acc {
            Some(a) => tape.add(a, sq)?,
            None => sq,
        });
    }
    let acc = match acc {
        Some(a) => a,
        None => tape.leaf_from(crate::tensor::Shape::SCALAR, vec![T::zero()])?,
    };
    Ok(tape.scale(acc, lambda))
}
