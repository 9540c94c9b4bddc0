//! Reference computations over plain `Vec<f64>` with explicit loops, kept
//! free of the tape and of the library's batching code.

#![allow(clippy::needless_range_loop)]

use murzim::model::ReadoutParams;
use murzim::tensor::{GruParams, Tensor};
use std::collections::{BTreeMap, HashSet};

pub type Matrix = Vec<Vec<f64>>;

pub fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Row vector times matrix.
pub fn vm(x: &[f64], w: &Tensor<f64>) -> Vec<f64> {
    let (r, c) = (w.shape().rows, w.shape().cols);
    assert_eq!(x.len(), r);
    let mut out = vec![0.0; c];
    for j in 0..c {
        for i in 0..r {
            out[j] += x[i] * w.get(i, j);
        }
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

pub fn gru(h: &[f64], x: &[f64], p: &GruParams<f64>) -> Vec<f64> {
    let d = h.len();
    let (xu, hu) = (vm(x, &p.w_update), vm(h, &p.u_update));
    let (xr, hr) = (vm(x, &p.w_reset), vm(h, &p.u_reset));
    let mut u = vec![0.0; d];
    let mut r = vec![0.0; d];
    for c in 0..d {
        u[c] = sig(xu[c] + hu[c] + p.b_update.data()[c]);
        r[c] = sig(xr[c] + hr[c] + p.b_reset.data()[c]);
    }
    let mut rh = vec![0.0; d];
    for c in 0..d {
        rh[c] = r[c] * h[c];
    }
    let (xc, hc) = (vm(x, &p.w_candidate), vm(&rh, &p.u_candidate));
    let mut out = vec![0.0; d];
    for c in 0..d {
        let cand = (xc[c] + hc[c] + p.b_candidate.data()[c]).tanh();
        out[c] = (1.0 - u[c]) * h[c] + u[c] * cand;
    }
    out
}

/// Gated propagation over dense `n x n` adjacency matrices.
pub fn propagate(
    init: &Matrix,
    m_in: &[f64],
    m_out: &[f64],
    p: &GruParams<f64>,
    steps: usize,
) -> Matrix {
    let n = init.len();
    let mut e = init.clone();
    for _ in 0..steps {
        let d = e.first().map_or(0, Vec::len);
        let mut next = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = vec![0.0; 2 * d];
            for k in 0..n {
                for c in 0..d {
                    x[c] += m_in[i * n + k] * e[k][c];
                    x[d + c] += m_out[i * n + k] * e[k][c];
                }
            }
            next.push(gru(&e[i], &x, p));
        }
        e = next;
    }
    e
}

/// Attention readout; `last` lists the node slots of the final position.
pub fn sequence_embedding(
    nodes: &Matrix,
    last: &[usize],
    p: &ReadoutParams<f64>,
    d: usize,
) -> Vec<f64> {
    if nodes.is_empty() {
        return vec![0.0; d];
    }
    let mut e_last = vec![0.0; d];
    for &s in last {
        for c in 0..d {
            e_last[c] += nodes[s][c] / last.len() as f64;
        }
    }
    let q_last = vm(&e_last, &p.w_last);
    let mut pooled = vec![0.0; d];
    for e in nodes {
        let k = vm(e, &p.w_node);
        let mut alpha = 0.0;
        for c in 0..d {
            alpha += p.q.data()[c] * sig(q_last[c] + k[c] + p.c.data()[c]);
        }
        for c in 0..d {
            pooled[c] += alpha * e[c];
        }
    }
    let mut both = pooled;
    both.extend_from_slice(&e_last);
    vm(&both, &p.w_out)
}

/// Residual gated fusion of one example's channel embeddings.
pub fn fuse(seqs: &[Vec<f64>], w: &Tensor<f64>) -> Vec<f64> {
    let d = seqs[0].len();
    let query = vm(&seqs[0], w);
    let mut z = seqs[0].clone();
    for s in seqs {
        let gate = sig(dot(&query, s) / (d as f64).sqrt());
        for c in 0..d {
            z[c] += gate * s[c];
        }
    }
    z
}

/// Softmax over `gamma * cos(z, v_i)`.
pub fn score(z: &[f64], items: &Matrix, gamma: f64) -> Vec<f64> {
    let zn = dot(z, z).sqrt();
    let logits: Vec<f64> = items
        .iter()
        .map(|v| gamma * dot(z, v) / (zn * dot(v, v).sqrt()))
        .collect();
    let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.iter().map(|e| e / total).collect()
}

/// Mean over sessions of `1 - distinct / total` value counts; `values[i]`
/// lists the value names of item `i`. Sessions without values count as 0
/// unless `skip_empty`.
pub fn attribute_score(sessions: &[Vec<usize>], values: &[Vec<String>], skip_empty: bool) -> f64 {
    let mut sum = 0.0;
    let mut counted = 0.0;
    for s in sessions {
        let all: Vec<&String> = s.iter().flat_map(|&i| &values[i]).collect();
        if all.is_empty() {
            if !skip_empty {
                counted += 1.0;
            }
            continue;
        }
        let distinct: HashSet<&String> = all.iter().copied().collect();
        sum += 1.0 - distinct.len() as f64 / all.len() as f64;
        counted += 1.0;
    }
    if counted == 0.0 {
        0.0
    } else {
        sum / counted
    }
}

/// Weighted edges of a sequence of node sets, keyed by node id.
pub struct BruteGraph {
    pub nodes: HashSet<usize>,
    pub out: BTreeMap<(usize, usize), f64>,
    pub inc: BTreeMap<(usize, usize), f64>,
    pub last: HashSet<usize>,
}

/// Enumerates every pair of positions and keeps those the graph rules link:
/// adjacent non-empty positions, or with `bridge`, non-empty positions
/// separated only by empty ones.
pub fn brute_graph(
    positions: &[Vec<usize>],
    bridge: bool,
    binary: bool,
    self_loops: bool,
) -> BruteGraph {
    let mut counts: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for a in 0..positions.len() {
        for b in a + 1..positions.len() {
            if positions[a].is_empty() || positions[b].is_empty() {
                continue;
            }
            let gap_empty = positions[a + 1..b].iter().all(Vec::is_empty);
            let linked = b == a + 1 || (bridge && gap_empty);
            if !linked {
                continue;
            }
            for &u in &positions[a] {
                for &v in &positions[b] {
                    if u == v && !self_loops {
                        continue;
                    }
                    *counts.entry((u, v)).or_default() += 1.0;
                }
            }
        }
    }
    if binary {
        for c in counts.values_mut() {
            *c = 1.0;
        }
    }
    let mut out_total: BTreeMap<usize, f64> = BTreeMap::new();
    let mut in_total: BTreeMap<usize, f64> = BTreeMap::new();
    for (&(u, v), &c) in &counts {
        *out_total.entry(u).or_default() += c;
        *in_total.entry(v).or_default() += c;
    }
    let out = counts
        .iter()
        .map(|(&(u, v), &c)| ((u, v), c / out_total[&u]))
        .collect();
    let inc = counts
        .iter()
        .map(|(&(u, v), &c)| ((v, u), c / in_total[&v]))
        .collect();
    BruteGraph {
        nodes: positions.iter().flatten().copied().collect(),
        out,
        inc,
        last: positions
            .iter()
            .rev()
            .find(|p| !p.is_empty())
            .map(|p| p.iter().copied().collect())
            .unwrap_or_default(),
    }
}
