//! Acceptance harness: one PASS/FAIL/SKIP line per criterion.
//!
//! Run with `cargo test -p murzim --test acceptance`. Set
//! `MURZIM_DIGINETICA_BUNDLE` to an ingested Diginetica bundle to enable the
//! attribute-score reproduction check.

#![allow(clippy::needless_range_loop)]

#[path = "../common/mod.rs"]
mod common;
mod oracle;

use common::brute::*;
use common::*;
use murzim::attribute_score::{attribute_score, rank_attributes, EmptySessions};
use murzim::bundle::Bundle;
use murzim::data::{
    augment_prefixes, holdout_latest, Attribute, AttributeTable, SessionSet, TrainingExample,
};
use murzim::eval::{
    evaluate_model, mrr_at_k, recall_at_k, ItemKnn, KnnWeighting, Pop, Ranker, SPop,
};
use murzim::graph::{
    batch_graphs, build_graph, EdgeWeighting, EmptyPositions, ExampleGraphs, GraphOptions,
    SelfLoops, SessionGraph,
};
use murzim::model::{
    fuse_sequences, propagate, score_items, sequence_embedding, Model, ModelConfig, ReadoutParams,
};
use murzim::synthetic::{generate, Signal, SyntheticSpec};
use murzim::tensor::{GruParams, Shape, Tape, Tensor};
use murzim::train::{metrics_log, train, TrainConfig, TrainingData};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

#[derive(Clone, Copy, PartialEq, Eq)]
enum Status {
    Pass,
    Fail,
    Skip,
    NotApplicable,
}

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    status: Status,
    detail: String,
}

impl Outcome {
    fn check(ok: bool, detail: impl Into<String>) -> Self {
        Outcome {
            status: if ok { Status::Pass } else { Status::Fail },
            detail: detail.into(),
        }
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_tensor(r: &mut ChaCha8Rng, rows: usize, cols: usize, scale: f64) -> Tensor<f64> {
    let data = (0..rows * cols)
        .map(|_| r.gen_range(-scale..scale))
        .collect();
    Tensor::from_vec(Shape::new(rows, cols), data).unwrap()
}

fn random_gru(r: &mut ChaCha8Rng, d: usize) -> GruParams<f64> {
    let mut p = GruParams::zeros(2 * d, d);
    for (_, t) in p.named_mut() {
        *t = random_tensor(r, t.shape().rows, t.shape().cols, 0.8);
    }
    p
}

fn random_readout(r: &mut ChaCha8Rng, d: usize) -> ReadoutParams<f64> {
    ReadoutParams {
        w_last: random_tensor(r, d, d, 0.8),
        w_node: random_tensor(r, d, d, 0.8),
        q: random_tensor(r, d, 1, 0.8),
        c: random_tensor(r, 1, d, 0.8),
        w_out: random_tensor(r, 2 * d, d, 0.8),
    }
}

/// Random value lists per item: attribute 0 single-valued, attribute 1
/// multi-valued with some items left without values.
fn random_values(r: &mut ChaCha8Rng, num_items: usize) -> Vec<Vec<Vec<String>>> {
    let single = (0..num_items)
        .map(|_| vec![format!("c{}", r.gen_range(0..4))])
        .collect();
    let multi = (0..num_items)
        .map(|_| {
            let mut v: Vec<String> = (0..r.gen_range(0..4))
                .map(|_| format!("t{}", r.gen_range(0..5)))
                .collect();
            let mut seen = Vec::new();
            v.retain(|x| {
                let new = !seen.contains(x);
                seen.push(x.clone());
                new
            });
            v
        })
        .collect();
    vec![single, multi]
}

fn table_of(values: &[Vec<Vec<String>>], num_items: usize) -> AttributeTable {
    let attributes = values
        .iter()
        .enumerate()
        .map(|(j, per_item)| {
            let mut a = Attribute::new(format!("a{j}"), num_items);
            for (i, vals) in per_item.iter().enumerate() {
                for v in vals {
                    a.assign(i, v);
                }
            }
            a
        })
        .collect();
    AttributeTable {
        num_items,
        attributes,
    }
}

fn random_prefix(r: &mut ChaCha8Rng, num_items: usize, max_len: usize) -> Vec<usize> {
    (0..r.gen_range(1..=max_len))
        .map(|_| r.gen_range(0..num_items))
        .collect()
}

// 1

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let mut r = rng(101);
    let num_items = 6;
    let values = random_values(&mut r, num_items);
    let table = table_of(&values[1..], num_items);
    let mut cfg = ModelConfig::new(num_items, 4, 1);
    cfg.steps = 2;
    let mut model = Model::<f64>::new(cfg, 3).unwrap();
    for (name, t) in model.params.named_mut() {
        for x in t.data_mut() {
            *x = if name == "log_gamma" {
                r.gen_range(0.5..2.0)
            } else {
                r.gen_range(-0.7..0.7)
            };
        }
    }
    let prefixes = [vec![0, 1, 2, 1, 3], vec![4, 5, 4]];
    let graphs: Vec<ExampleGraphs> = prefixes
        .iter()
        .map(|p| ExampleGraphs::build(p, &table, GraphOptions::default()).unwrap())
        .collect();
    let batch = batch_graphs(&graphs.iter().collect::<Vec<_>>(), &[3, 2]).unwrap();
    let lambda = 1e-3;
    let analytic = model.loss_and_gradients(&batch, lambda).unwrap().grads;

    let h = 1e-6;
    let mut total = 0;
    let mut passed = 0;
    let mut worst: f64 = 0.0;
    for ti in 0..analytic.len() {
        for k in 0..analytic[ti].len() {
            let orig = model.params.tensors_mut()[ti].data()[k];
            model.params.tensors_mut()[ti].data_mut()[k] = orig + h;
            let up = model.loss(&batch, lambda).unwrap();
            model.params.tensors_mut()[ti].data_mut()[k] = orig - h;
            let down = model.loss(&batch, lambda).unwrap();
            model.params.tensors_mut()[ti].data_mut()[k] = orig;
            let numeric = (up - down) / (2.0 * h);
            let a = analytic[ti][k];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
            total += 1;
            passed += usize::from(rel < 1e-3);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        passed == total && secs < 60.0,
        format!(
            "{passed}/{total} parameters within 1e-3, worst relative error {worst:.2e}, {secs:.1}s"
        ),
    )
}

// 2

fn transcription_oracles() -> Outcome {
    let mut r = rng(202);
    let mut worst = [0.0f64; 5];
    let diff = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    for _ in 0..100 {
        let num_items = r.gen_range(4..12);
        let d = r.gen_range(2..6);
        let values = random_values(&mut r, num_items);
        let table = table_of(&values, num_items);
        let prefixes: Vec<Vec<usize>> = (0..3)
            .map(|_| random_prefix(&mut r, num_items, 8))
            .collect();
        let graphs: Vec<ExampleGraphs> = prefixes
            .iter()
            .map(|p| ExampleGraphs::build(p, &table, GraphOptions::default()).unwrap())
            .collect();
        let batch = batch_graphs(&graphs.iter().collect::<Vec<_>>(), &[0, 0, 0]).unwrap();

        for (c, ch) in batch.channels.iter().enumerate() {
            let gru = random_gru(&mut r, d);
            let readout = random_readout(&mut r, d);
            let steps = r.gen_range(1..=3);
            let mut init = Tensor::zeros(Shape::new(ch.batch_size() * ch.width, d));
            for (row, &real) in ch.mask.iter().enumerate() {
                if real {
                    for x in &mut init.data_mut()[row * d..(row + 1) * d] {
                        *x = r.gen_range(-1.0..1.0);
                    }
                }
            }
            let mut tape = Tape::new();
            let nodes = tape.leaf(&init);
            let gv = gru.register(&mut tape);
            let propagated = propagate(&mut tape, nodes, ch, &gv, steps).unwrap();
            let rv = readout.register(&mut tape);
            let seq = sequence_embedding(&mut tape, nodes, ch, &rv).unwrap();
            let (propagated, seq) = (tape.tensor(propagated), tape.tensor(seq));

            for (b, eg) in graphs.iter().enumerate() {
                let g: &SessionGraph = eg.channel(c);
                let rows: oracle::Matrix = (0..g.n())
                    .map(|s| init.row(b * ch.width + s).to_vec())
                    .collect();
                let expect = oracle::propagate(&rows, &g.m_in, &g.m_out, &gru, steps);
                for (s, e) in expect.iter().enumerate() {
                    worst[0] = worst[0].max(diff(propagated.row(b * ch.width + s), e));
                }
                let expect = oracle::sequence_embedding(&rows, &g.last_slots, &readout, d);
                worst[1] = worst[1].max(diff(seq.row(b), &expect));
            }
        }

        let bsz = 3;
        let seqs: Vec<Tensor<f64>> = (0..=values.len())
            .map(|_| random_tensor(&mut r, bsz, d, 1.0))
            .collect();
        let w = random_tensor(&mut r, d, d, 1.0);
        let items = random_tensor(&mut r, num_items, d, 1.0);
        let log_gamma: f64 = r.gen_range(0.0..3.0);
        let mut tape = Tape::new();
        let sv: Vec<_> = seqs.iter().map(|s| tape.leaf(s)).collect();
        let wv = tape.leaf(&w);
        let z = fuse_sequences(&mut tape, &sv, wv).unwrap();
        let iv = tape.leaf(&items);
        let gv = tape.leaf(&Tensor::scalar(log_gamma));
        let probs = score_items(&mut tape, z, iv, gv).unwrap();
        let (z, probs) = (tape.tensor(z), tape.tensor(probs));
        let item_rows: oracle::Matrix = (0..num_items).map(|i| items.row(i).to_vec()).collect();
        for b in 0..bsz {
            let per: Vec<Vec<f64>> = seqs.iter().map(|s| s.row(b).to_vec()).collect();
            let expect_z = oracle::fuse(&per, &w);
            worst[2] = worst[2].max(diff(z.row(b), &expect_z));
            let expect_p = oracle::score(z.row(b), &item_rows, log_gamma.exp());
            worst[3] = worst[3].max(diff(probs.row(b), &expect_p));
        }

        let sessions: Vec<Vec<usize>> = (0..r.gen_range(1..10))
            .map(|_| random_prefix(&mut r, num_items, 7))
            .collect();
        let set = SessionSet {
            sessions: sessions
                .iter()
                .enumerate()
                .map(|(i, items)| murzim::data::Session {
                    id: format!("s{i}"),
                    items: items.clone(),
                    times: vec![0.0; items.len()],
                })
                .collect(),
            vocab: murzim::data::Vocabulary::from_ids((0..num_items).map(|i| format!("v{i}"))),
        };
        for (j, vals) in values.iter().enumerate() {
            for (empty, skip) in [(EmptySessions::Zero, false), (EmptySessions::Skip, true)] {
                let got = attribute_score(&set, &table, j, empty).unwrap();
                let expect = oracle::attribute_score(&sessions, vals, skip);
                worst[4] = worst[4].max((got - expect).abs());
            }
        }
    }
    let names = [
        "propagate",
        "sequence_embedding",
        "fuse_sequences",
        "score_items",
        "attribute_score",
    ];
    let detail = names
        .iter()
        .zip(worst)
        .map(|(n, w)| format!("{n} {w:.1e}"))
        .collect::<Vec<_>>()
        .join(", ");
    Outcome::check(
        worst.iter().all(|&w| w < 1e-9),
        format!("max abs diff: {detail}"),
    )
}

// 3

fn graph_oracle() -> Outcome {
    let mut r = rng(303);
    let mut mismatches = 0;
    let mut row_error: f64 = 0.0;
    let mut graphs = 0;
    for i in 0..200 {
        let num_items = r.gen_range(3..10);
        let values = random_values(&mut r, num_items);
        let table = table_of(&values, num_items);
        let prefix = random_prefix(&mut r, num_items, 10);
        // half the prefixes see only the single-valued attribute
        let attrs = if i % 2 == 0 {
            &table.attributes[..1]
        } else {
            &table.attributes[..]
        };
        let mut sequences: Vec<Vec<Vec<usize>>> = vec![prefix.iter().map(|&x| vec![x]).collect()];
        for a in attrs {
            sequences.push(prefix.iter().map(|&x| a.of(x).to_vec()).collect());
        }
        for seq in &sequences {
            for (edges, empty, self_loops) in [
                (
                    EdgeWeighting::Counts,
                    EmptyPositions::Bridge,
                    SelfLoops::Keep,
                ),
                (
                    EdgeWeighting::Binary,
                    EmptyPositions::Bridge,
                    SelfLoops::Keep,
                ),
                (
                    EdgeWeighting::Counts,
                    EmptyPositions::Break,
                    SelfLoops::Keep,
                ),
                (
                    EdgeWeighting::Counts,
                    EmptyPositions::Bridge,
                    SelfLoops::Drop,
                ),
            ] {
                graphs += 1;
                let options = GraphOptions {
                    edges,
                    empty,
                    self_loops,
                };
                let g = build_graph(seq.iter().map(Vec::as_slice), options);
                let brute = oracle::brute_graph(
                    seq,
                    empty == EmptyPositions::Bridge,
                    edges == EdgeWeighting::Binary,
                    self_loops == SelfLoops::Keep,
                );
                let n = g.n();
                let node_set: std::collections::HashSet<usize> = g.nodes.iter().copied().collect();
                let last: std::collections::HashSet<usize> =
                    g.last_slots.iter().map(|&s| g.nodes[s]).collect();
                let mut same = node_set == brute.nodes && node_set.len() == n && last == brute.last;
                for u in 0..n {
                    for v in 0..n {
                        let key = (g.nodes[u], g.nodes[v]);
                        same &= g.out_row(u)[v] == brute.out.get(&key).copied().unwrap_or(0.0);
                        same &= g.in_row(u)[v] == brute.inc.get(&key).copied().unwrap_or(0.0);
                    }
                    for row in [g.out_row(u), g.in_row(u)] {
                        let s: f64 = row.iter().sum();
                        if s != 0.0 {
                            row_error = row_error.max((s - 1.0).abs());
                        }
                    }
                }
                mismatches += usize::from(!same);
            }
        }
    }
    Outcome::check(
        mismatches == 0 && row_error <= 1e-9,
        format!("{mismatches} of {graphs} graphs differ from the enumerator; worst row sum error {row_error:.1e}"),
    )
}

// 4

fn batch_invariance() -> Outcome {
    let mut r = rng(404);
    let num_items = 30;
    let table = table_of(&random_values(&mut r, num_items), num_items);
    let model = Model::<f32>::new(ModelConfig::new(num_items, 8, 2), 4).unwrap();
    let build = |p: &[usize]| ExampleGraphs::build(p, &table, GraphOptions::default()).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..50 {
        let target = random_prefix(&mut r, num_items, 12);
        let mut prefixes: Vec<Vec<usize>> = (0..15)
            .map(|_| random_prefix(&mut r, num_items, 12))
            .collect();
        let at = r.gen_range(0..16);
        prefixes.insert(at, target.clone());
        let graphs: Vec<ExampleGraphs> = prefixes.iter().map(|p| build(p)).collect();
        let batch = batch_graphs(&graphs.iter().collect::<Vec<_>>(), &[0; 16]).unwrap();
        let together = model.forward(&batch).unwrap().probs;
        let alone_graph = build(&target);
        let alone = model
            .forward(&batch_graphs(&[&alone_graph], &[0]).unwrap())
            .unwrap()
            .probs;
        for (a, b) in together.row(at).iter().zip(alone.row(0)) {
            worst = worst.max((a - b).abs() as f64);
        }
    }
    Outcome::check(
        worst <= 1e-6,
        format!("worst difference {worst:.1e} over 50 examples in 32-bit"),
    )
}

// 5

fn memorization() -> Outcome {
    let start = Instant::now();
    let fx = Fixture::from_corpus(&memorization_corpus());
    let out = train::<f32>(&fx.data(), &memorization_config(200), &mut no_callback()).unwrap();
    let report = evaluate_model(
        "m",
        &out.best.model,
        &fx.attributes,
        out.best.train_config.graph,
        &fx.examples,
        1,
        64,
    )
    .unwrap();
    let secs = start.elapsed().as_secs_f64();
    Outcome::check(
        report.recall >= 0.95 && secs < 300.0,
        format!(
            "Recall@1 {:.4} on {} training prefixes, {secs:.1}s",
            report.recall, report.count
        ),
    )
}

// 6

fn signal_run(seed: u64, with_attributes: bool) -> f64 {
    let corpus = generate(&SyntheticSpec {
        num_items: 200,
        attribute_values: vec![10],
        sessions: 5000,
        min_len: 2,
        max_len: 10,
        signal: Signal::AttributeDriven {
            p: 0.9,
            attribute: 0,
        },
        seed,
    })
    .unwrap();
    // sessions are generated in time order; the last fifth is the test set
    let cut = corpus.sessions.len() * 4 / 5;
    let train_set = SessionSet {
        sessions: corpus.sessions.sessions[..cut].to_vec(),
        vocab: corpus.sessions.vocab.clone(),
    };
    let test_set = SessionSet {
        sessions: corpus.sessions.sessions[cut..].to_vec(),
        vocab: corpus.sessions.vocab.clone(),
    };
    let config = TrainConfig {
        dim: 32,
        seed,
        ..TrainConfig::default()
    };
    let (fit, held) = holdout_latest(&train_set, config.validation_fraction);
    let (train_examples, validation) = (augment_prefixes(&fit), augment_prefixes(&held));
    let attributes = if with_attributes {
        corpus.attributes.clone()
    } else {
        AttributeTable::empty(200)
    };
    let data = TrainingData {
        train: &train_examples,
        validation: &validation,
        vocabulary: &train_set.vocab,
        attributes: &attributes,
    };
    let out = train::<f32>(&data, &config, &mut no_callback()).unwrap();
    let test: Vec<TrainingExample> = augment_prefixes(&test_set);
    evaluate_model(
        "m",
        &out.best.model,
        &attributes,
        config.graph,
        &test,
        20,
        512,
    )
    .unwrap()
    .recall
}

fn attribute_benefit() -> Outcome {
    let start = Instant::now();
    let mut gains = Vec::new();
    let mut runs = Vec::new();
    for seed in 0..3 {
        let with = signal_run(seed, true);
        let without = signal_run(seed, false);
        gains.push(100.0 * (with - without));
        runs.push(format!(
            "seed {seed}: K=1 {:.2} K=0 {:.2}",
            100.0 * with,
            100.0 * without
        ));
    }
    gains.sort_by(f64::total_cmp);
    let median = gains[1];
    // the next item is one of the 19 same-value items with probability 0.9,
    // otherwise uniform over all 200
    let ceiling = 100.0 * (0.9 + 0.1 * 20.0 / 200.0);
    Outcome::check(
        median >= 3.0,
        format!(
            "median gain {median:+.2} points ({}; best attainable Recall@20 about {ceiling:.1}); {:.0}s",
            runs.join(", "),
            start.elapsed().as_secs_f64()
        ),
    )
}

// 7

fn reference_scores() -> Outcome {
    let Ok(dir) = std::env::var("MURZIM_DIGINETICA_BUNDLE") else {
        let invariant = (0..5).all(|seed| {
            let c = generate(&SyntheticSpec {
                num_items: 200,
                attribute_values: vec![10, 10],
                sessions: 2000,
                min_len: 2,
                max_len: 10,
                signal: Signal::AttributeDriven {
                    p: 0.9,
                    attribute: 0,
                },
                seed,
            })
            .unwrap();
            let signal =
                attribute_score(&c.sessions, &c.attributes, 0, EmptySessions::Zero).unwrap();
            let decoy =
                attribute_score(&c.sessions, &c.attributes, 1, EmptySessions::Zero).unwrap();
            signal > decoy
        });
        return Outcome {
            status: Status::Skip,
            detail: format!(
                "MURZIM_DIGINETICA_BUNDLE not set; synthetic signal-over-decoy ranking holds for 5 seeds: {invariant}"
            ),
        };
    };
    let bundle = match Bundle::load(std::path::Path::new(&dir)) {
        Ok(b) => b,
        Err(e) => return Outcome::check(false, format!("cannot load {dir}: {e}")),
    };
    let report = rank_attributes(&bundle.train, &bundle.attributes, EmptySessions::Zero).unwrap();
    let targets = [
        (&["category", "categoryid"][..], 0.6450),
        (&["pricelog2"][..], 0.4971),
        (
            &["name.tokens", "name_tokens", "nametoken", "name"][..],
            0.2498,
        ),
    ];
    let mut ok = true;
    let mut parts = Vec::new();
    for (names, target) in targets {
        let found = report
            .scores
            .iter()
            .find(|s| names.contains(&s.name.to_lowercase().as_str()));
        match found {
            Some(s) => {
                ok &= (s.score - target).abs() <= 0.02;
                parts.push(format!("{} {:.4} (target {target})", s.name, s.score));
            }
            None => {
                ok = false;
                parts.push(format!("{} missing", names[0]));
            }
        }
    }
    Outcome::check(ok, parts.join(", "))
}

// 8

fn baseline_oracles() -> Outcome {
    let mut r = rng(808);
    let mut mismatches = 0;
    let mut queries = 0;
    for _ in 0..50 {
        let set = random_corpus(&mut r);
        let n = set.num_items();
        let pop = Pop::fit(&set);
        let spop = SPop::fit(&set);
        let knn = ItemKnn::fit(&set, KnnWeighting::Cosine);
        let sim = brute_similarity(&set, false);
        for i in 0..n {
            for j in 0..n {
                mismatches += usize::from(knn.similarity(i, j) != sim[i][j]);
            }
        }
        for _ in 0..10 {
            let prefix = random_prefix(&mut r, n, 6);
            let k = r.gen_range(1..n + 4);
            queries += 1;
            mismatches += usize::from(pop.rank(&prefix, k) != brute_pop(&set, k));
            mismatches += usize::from(spop.rank(&prefix, k) != brute_spop(&set, &prefix, k));
            mismatches += usize::from(knn.rank(&prefix, k) != brute_knn(&set, &sim, &prefix, k));
        }
    }

    let with_label_at = |ranks: &[usize]| -> Vec<Vec<usize>> {
        ranks
            .iter()
            .map(|&rank| {
                let mut l: Vec<usize> = (1..40).collect();
                l.insert(rank - 1, 0);
                l
            })
            .collect()
    };
    let a = with_label_at(&[1, 2, 4]);
    let b = with_label_at(&[1, 21, 5]);
    let labels = [0, 0, 0];
    let fixtures = [
        (mrr_at_k(&a, &labels, 20).unwrap(), 7.0 / 12.0),
        (recall_at_k(&a, &labels, 20).unwrap(), 1.0),
        (recall_at_k(&b, &labels, 20).unwrap(), 2.0 / 3.0),
        (mrr_at_k(&b, &labels, 20).unwrap(), (1.0 + 0.2) / 3.0),
    ];
    let fixture_ok = fixtures
        .iter()
        .all(|(got, want)| (got - want).abs() < 1e-15);
    Outcome::check(
        mismatches == 0 && fixture_ok,
        format!(
            "{mismatches} mismatches over 50 corpora and {queries} queries; rank fixtures {}",
            if fixture_ok { "match" } else { "differ" }
        ),
    )
}

// 10

fn determinism() -> Outcome {
    let fx = Fixture::from_corpus(&small_corpus(10));
    let config = TrainConfig {
        seed: 17,
        ..quick_config(4)
    };
    let run = || train::<f64>(&fx.data(), &config, &mut no_callback()).unwrap();
    let (a, b) = (run(), run());
    let same_log = metrics_log(&a.log, config.eval_k) == metrics_log(&b.log, config.eval_k);
    let same_ckpt = a.best.to_bytes() == b.best.to_bytes();
    Outcome::check(
        same_log && same_ckpt,
        format!("metrics logs identical: {same_log}, checkpoints identical: {same_ckpt}"),
    )
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("gradient correctness", gradient_check),
        ("transcription oracles", transcription_oracles),
        ("graph construction oracle", graph_oracle),
        ("batch invariance", batch_invariance),
        ("overfit memorization", memorization),
        ("attribute-signal benefit", attribute_benefit),
        ("attribute-score reproduction", reference_scores),
        ("baseline oracles", baseline_oracles),
        ("full-scale reproduction", || Outcome {
            status: Status::NotApplicable,
            detail: "requires the complete public datasets and long training runs".into(),
        }),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = run();
        let tag = match outcome.status {
            Status::Pass => "PASS",
            Status::Fail => {
                failed += 1;
                "FAIL"
            }
            Status::Skip => "SKIP",
            Status::NotApplicable => "N/A ",
        };
        println!("{tag} {:>2} {name}: {}", i + 1, outcome.detail);
    }
    println!("acceptance: {failed} of {} criteria failed", criteria.len());
}
