// Index loops mirror the written-out formulas.
#![allow(clippy::needless_range_loop)]

use super::*;
use crate::data::{Attribute, AttributeTable};
use crate::graph::{batch_graphs, ExampleGraphs, GraphOptions, SessionGraph};
use crate::tensor::GruParams;
use rand::Rng;

const NUM_ITEMS: usize = 8;

fn table() -> AttributeTable {
    // single-valued attribute with three values
    let mut a = Attribute::new("cat", NUM_ITEMS);
    for i in 0..NUM_ITEMS {
        a.assign(i, ["x", "y", "z"][i % 3]);
    }
    // multi-valued with some valueless items
    let mut b = Attribute::new("tag", NUM_ITEMS);
    for (i, vals) in [
        &["p", "q"][..],
        &["q"],
        &[],
        &["r"],
        &["p"],
        &[],
        &["q", "r"],
        &["p"],
    ]
    .iter()
    .enumerate()
    {
        for v in *vals {
            b.assign(i, v);
        }
    }
    AttributeTable {
        num_items: NUM_ITEMS,
        attributes: vec![a, b],
    }
}

fn randomized(config: ModelConfig, seed: u64) -> Model<f64> {
    let mut m = Model::<f64>::new(config, seed).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xfeed);
    for (name, t) in m.params.named_mut() {
        if name == "log_gamma" {
            t.data_mut()[0] = rng.gen_range(1.0..2.5);
            continue;
        }
        for x in t.data_mut() {
            *x = rng.gen_range(-0.6..0.6);
        }
    }
    m
}

fn batch_of(prefixes: &[&[usize]], labels: &[usize], table: &AttributeTable) -> GraphBatch {
    let graphs: Vec<ExampleGraphs> = prefixes
        .iter()
        .map(|p| ExampleGraphs::build(p, table, GraphOptions::default()).unwrap())
        .collect();
    let refs: Vec<&ExampleGraphs> = graphs.iter().collect();
    batch_graphs(&refs, labels).unwrap()
}

// Straight-line reference implementation over plain vectors.

fn vm(x: &[f64], w: &Tensor<f64>) -> Vec<f64> {
    let (r, c) = (w.shape().rows, w.shape().cols);
    assert_eq!(x.len(), r);
    (0..c)
        .map(|j| (0..r).map(|i| x[i] * w.data()[i * c + j]).sum())
        .collect()
}

fn sig(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn add3(a: &[f64], b: &[f64], c: &[f64]) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(c)
        .map(|((x, y), z)| x + y + z)
        .collect()
}

fn gru(h: &[f64], x: &[f64], p: &GruParams<f64>) -> Vec<f64> {
    let u: Vec<f64> = add3(&vm(x, &p.w_update), &vm(h, &p.u_update), p.b_update.data())
        .into_iter()
        .map(sig)
        .collect();
    let r: Vec<f64> = add3(&vm(x, &p.w_reset), &vm(h, &p.u_reset), p.b_reset.data())
        .into_iter()
        .map(sig)
        .collect();
    let rh: Vec<f64> = r.iter().zip(h).map(|(a, b)| a * b).collect();
    let c: Vec<f64> = add3(
        &vm(x, &p.w_candidate),
        &vm(&rh, &p.u_candidate),
        p.b_candidate.data(),
    )
    .into_iter()
    .map(f64::tanh)
    .collect();
    (0..h.len())
        .map(|i| (1.0 - u[i]) * h[i] + u[i] * c[i])
        .collect()
}

fn channel(
    init: Vec<Vec<f64>>,
    g: &SessionGraph,
    gp: &GruParams<f64>,
    rp: &ReadoutParams<f64>,
    steps: usize,
    d: usize,
) -> Vec<f64> {
    let n = g.n();
    if n == 0 {
        return vec![0.0; d];
    }
    let mut e = init;
    for _ in 0..steps {
        e = (0..n)
            .map(|i| {
                let mut x = vec![0.0; 2 * d];
                for k in 0..n {
                    for c in 0..d {
                        x[c] += g.m_in[i * n + k] * e[k][c];
                        x[d + c] += g.m_out[i * n + k] * e[k][c];
                    }
                }
                gru(&e[i], &x, gp)
            })
            .collect();
    }
    let mut last = vec![0.0; d];
    for &s in &g.last_slots {
        for c in 0..d {
            last[c] += e[s][c] / g.last_slots.len() as f64;
        }
    }
    let ql = vm(&last, &rp.w_last);
    let mut pooled = vec![0.0; d];
    for ei in &e {
        let pre = add3(&ql, &vm(ei, &rp.w_node), rp.c.data());
        let alpha: f64 = pre.iter().zip(rp.q.data()).map(|(p, q)| sig(*p) * q).sum();
        for c in 0..d {
            pooled[c] += alpha * ei[c];
        }
    }
    pooled.extend(last);
    vm(&pooled, &rp.w_out)
}

/// Scores of one prefix computed without the tape.
fn oracle(m: &Model<f64>, prefix: &[usize], table: &AttributeTable) -> (Vec<f64>, Vec<f64>) {
    let cfg = &m.config;
    let p = &m.params;
    let d = cfg.dim;
    let g = ExampleGraphs::build(prefix, table, GraphOptions::default()).unwrap();
    let emb = |i: usize| p.item_embeddings.row(i).to_vec();
    let item_init: Vec<Vec<f64>> = g.item.nodes.iter().map(|&i| emb(i)).collect();
    let mut seqs = vec![channel(
        item_init.clone(),
        &g.item,
        &p.gru[0],
        &p.readout[0],
        cfg.steps,
        d,
    )];
    for (j, ac) in g.attributes.iter().enumerate() {
        let c = j + 1;
        let init = ac
            .members
            .iter()
            .map(|carriers| {
                let denom = match cfg.attribute_init {
                    AttributeInit::SessionItems => g.item.n(),
                    AttributeInit::CarryingItems => carriers.len(),
                } as f64;
                let mut a = vec![0.0; d];
                for &s in carriers {
                    for (acc, v) in a.iter_mut().zip(vm(&item_init[s], &p.attribute_proj[j])) {
                        *acc += v / denom;
                    }
                }
                a
            })
            .collect();
        seqs.push(channel(
            init,
            &ac.graph,
            &p.gru[cfg.gru_index(c)],
            &p.readout[cfg.readout_index(c)],
            cfg.steps,
            d,
        ));
    }
    let query = vm(&seqs[0], &p.w_fuse);
    let mut z = seqs[0].clone();
    for s in &seqs {
        let dot: f64 = query.iter().zip(s).map(|(a, b)| a * b).sum();
        let gate = sig(dot / (d as f64).sqrt());
        for c in 0..d {
            z[c] += gate * s[c];
        }
    }
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let gamma = p.log_gamma.data()[0].exp();
    let logits: Vec<f64> = (0..cfg.num_items)
        .map(|i| {
            let v = emb(i);
            let dot: f64 = z.iter().zip(&v).map(|(a, b)| a * b).sum();
            gamma * dot / (norm(&z) * norm(&v))
        })
        .collect();
    let mx = logits.iter().cloned().fold(f64::MIN, f64::max);
    let ex: Vec<f64> = logits.iter().map(|l| (l - mx).exp()).collect();
    let total: f64 = ex.iter().sum();
    (ex.iter().map(|e| e / total).collect(), z)
}

const PREFIXES: [&[usize]; 4] = [&[0, 1, 0, 2], &[5], &[2, 5, 2], &[7, 3, 6, 3, 4]];

#[test]
fn forward_matches_straight_line_oracle() {
    let t = table();
    for (share_gru, share_readout, init, steps) in [
        (true, false, AttributeInit::SessionItems, 1),
        (false, true, AttributeInit::SessionItems, 2),
        (false, false, AttributeInit::CarryingItems, 3),
    ] {
        let mut cfg = ModelConfig::new(NUM_ITEMS, 4, 2);
        cfg.share_gru = share_gru;
        cfg.share_readout = share_readout;
        cfg.attribute_init = init;
        cfg.steps = steps;
        let m = randomized(cfg, 3);
        let b = batch_of(&PREFIXES, &[1, 2, 3, 4], &t);
        let out = m.forward(&b).unwrap();
        for (r, prefix) in PREFIXES.iter().enumerate() {
            let (probs, z) = oracle(&m, prefix, &t);
            for (a, e) in out.probs.row(r).iter().zip(&probs) {
                assert!((a - e).abs() < 1e-9, "row {r}: {a} vs {e}");
            }
            for (a, e) in out.fused.row(r).iter().zip(&z) {
                assert!((a - e).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn batching_does_not_change_rows() {
    let t = table();
    let m = randomized(ModelConfig::new(NUM_ITEMS, 5, 2), 9);
    let all = m.forward(&batch_of(&PREFIXES, &[0; 4], &t)).unwrap();
    for (r, p) in PREFIXES.iter().enumerate() {
        let one = m.forward(&batch_of(&[p], &[0], &t)).unwrap();
        for (a, b) in all.probs.row(r).iter().zip(one.probs.row(0)) {
            assert!((a - b).abs() < 1e-13);
        }
        let total: f64 = one.probs.row(0).iter().sum();
        assert!((total - 1.0).abs() < 1e-12);
    }
}

#[test]
fn item_only_fusion_is_a_positive_multiple() {
    let m = randomized(ModelConfig::new(NUM_ITEMS, 4, 0), 5);
    let out = m
        .forward(&batch_of(
            &PREFIXES,
            &[0; 4],
            &AttributeTable::empty(NUM_ITEMS),
        ))
        .unwrap();
    for r in 0..PREFIXES.len() {
        let s0 = out.sequences[0].row(r);
        let z = out.fused.row(r);
        let ratio = z[0] / s0[0];
        assert!(ratio > 1.0 && ratio < 2.0);
        for (a, b) in z.iter().zip(s0) {
            assert!((a - ratio * b).abs() < 1e-12);
        }
    }
}

#[test]
fn loss_is_cross_entropy_plus_penalty() {
    let t = table();
    let m = randomized(ModelConfig::new(NUM_ITEMS, 3, 2), 1);
    let labels = [1, 7, 0, 4];
    let b = batch_of(&PREFIXES, &labels, &t);
    let probs = m.forward(&b).unwrap().probs;
    let ce: f64 = -labels
        .iter()
        .enumerate()
        .map(|(r, &l)| probs.get(r, l).ln())
        .sum::<f64>()
        / 4.0;
    let lambda = 1e-3;
    let expected = ce + lambda * m.params.squared_norm();
    let got = m.loss_and_gradients(&b, lambda).unwrap();
    assert!((got.cross_entropy - ce).abs() < 1e-12);
    assert!((got.loss - expected).abs() < 1e-12);
    assert!((m.loss(&b, lambda).unwrap() - expected).abs() < 1e-12);
}

#[test]
fn gradients_match_central_differences() {
    let t = table();
    let mut cfg = ModelConfig::new(NUM_ITEMS, 3, 2);
    cfg.steps = 2;
    cfg.share_gru = false;
    let mut m = randomized(cfg, 21);
    let b = batch_of(&PREFIXES[..3], &[3, 0, 6], &t);
    let lambda = 1e-2;
    let analytic = m.loss_and_gradients(&b, lambda).unwrap().grads;
    let eps = 1e-6;
    let mut worst = 0.0f64;
    let names: Vec<String> = m.params.named().into_iter().map(|(n, _)| n).collect();
    for (ti, name) in names.iter().enumerate() {
        let len = m.params.named()[ti].1.data().len();
        for k in 0..len {
            let orig = m.params.tensors_mut()[ti].data()[k];
            m.params.tensors_mut()[ti].data_mut()[k] = orig + eps;
            let up = m.loss(&b, lambda).unwrap();
            m.params.tensors_mut()[ti].data_mut()[k] = orig - eps;
            let down = m.loss(&b, lambda).unwrap();
            m.params.tensors_mut()[ti].data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * eps);
            let a = analytic[ti][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-4);
            assert!(rel < 1e-5, "{name}[{k}]: analytic {a} numeric {numeric}");
            worst = worst.max(rel);
        }
    }
    assert!(worst < 1e-5);
}

#[test]
fn seeds_are_reproducible() {
    let cfg = ModelConfig::new(NUM_ITEMS, 4, 1);
    let a = Model::<f32>::new(cfg.clone(), 7).unwrap();
    let b = Model::<f32>::new(cfg.clone(), 7).unwrap();
    let c = Model::<f32>::new(cfg, 8).unwrap();
    assert_eq!(a, b);
    assert_ne!(a.params.item_embeddings, c.params.item_embeddings);
    assert!((a.params.gamma() - 10.0).abs() < 1e-5);
    assert!(a.params.readout[0].c.data().iter().all(|&x| x == 0.0));
    let bound = 0.5;
    assert!(a
        .params
        .item_embeddings
        .data()
        .iter()
        .all(|x| x.abs() < bound));
}

#[test]
fn rejects_mismatched_inputs() {
    let t = table();
    let m = Model::<f64>::new(ModelConfig::new(NUM_ITEMS, 3, 1), 0).unwrap();
    let b = batch_of(&PREFIXES, &[0; 4], &t);
    assert_eq!(
        m.forward(&b).unwrap_err(),
        ModelError::ChannelCount {
            expected: 2,
            found: 3
        }
    );
    let small = Model::<f64>::new(ModelConfig::new(4, 3, 2), 0).unwrap();
    assert!(matches!(
        small.forward(&b),
        Err(ModelError::ItemOutOfRange { num_items: 4, .. })
    ));

    let mut params = m.params.clone();
    params.w_fuse = Tensor::zeros(Shape::new(2, 3));
    assert!(matches!(
        Model::from_params(m.config.clone(), params),
        Err(ModelError::ParamShape { .. })
    ));
    assert!(Model::<f64>::new(ModelConfig::new(NUM_ITEMS, 0, 0), 0).is_err());
}
