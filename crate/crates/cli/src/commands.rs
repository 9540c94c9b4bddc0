use crate::args::*;
use crate::Failure;
use anyhow::{Context, Result};
use murzim::attribute_score::{rank_attributes, EmptySessions};
use murzim::bundle::{Bundle, Preprocessing};
use murzim::data::{
    augment_prefixes, holdout_latest, parse_attributes, parse_duration, parse_sessions, preprocess,
    split_by_time, write_attributes, write_sessions, AttributeTable, FilterPasses, FormatConfig,
    TrainingExample,
};
use murzim::eval::{
    evaluate_model, evaluate_ranker, recommend, reports_to_delimited, reports_to_table, EvalReport,
    ItemKnn, KnnWeighting, Pop, Ranker, SPop,
};
use murzim::graph::{EdgeWeighting, EmptyPositions, GraphOptions, SelfLoops};
use murzim::model::AttributeInit;
use murzim::synthetic::{generate, Signal, SyntheticSpec};
use murzim::tensor::{Precision, Scalar};
use murzim::train::{
    metrics_log, train, AnyCheckpoint, Checkpoint, EpochRecord, StopReason, TrainConfig,
    TrainingData,
};
use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Ingest(a) => ingest(a),
        Command::ScoreAttrs(a) => score_attrs(a),
        Command::Train(a) => train_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Recommend(a) => recommend_cmd(a),
        Command::Synth(a) => synth(a),
    }
}

fn require_file(path: &Path, what: &str) -> Result<()> {
    if !path.is_file() {
        return Err(Failure::Data(format!("{what} {} does not exist", path.display())).into());
    }
    Ok(())
}

fn delimiter_byte(c: char) -> Result<u8> {
    u8::try_from(c).ok().filter(u8::is_ascii).ok_or_else(|| {
        Failure::Usage(format!("delimiter {c:?} is not a single ASCII character")).into()
    })
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn load_bundle(path: &Path) -> Result<Bundle> {
    if !path.is_dir() {
        return Err(Failure::Data(format!("bundle {} does not exist", path.display())).into());
    }
    Ok(Bundle::load(path)?)
}

fn ingest(a: IngestArgs) -> Result<()> {
    require_file(&a.sessions, "sessions file")?;
    if let Some(p) = &a.attributes_file {
        require_file(p, "attributes file")?;
    }
    if a.min_item_count == 0 || a.min_session_len == 0 {
        return Err(Failure::Usage("filter thresholds must be at least 1".into()).into());
    }
    let holdout = parse_duration(&a.holdout).map_err(|e| Failure::Usage(e.to_string()))?;
    let format = FormatConfig {
        delimiter: delimiter_byte(a.delimiter)?,
        session_column: a.session_column,
        item_column: a.item_column,
        time_column: a.time_column,
        attribute_column: a.attribute_column,
        value_column: a.value_column,
    };

    let raw = parse_sessions(open(&a.sessions)?, &format)
        .with_context(|| format!("reading {}", a.sessions.display()))?;
    let passes = match a.filter_passes {
        Some(n) => FilterPasses::Limit(n),
        None => FilterPasses::Fixpoint,
    };
    let filtered = preprocess(&raw, a.min_item_count, a.min_session_len, passes);
    let split = split_by_time(&filtered, holdout);
    if split.train.is_empty() {
        log::warn!("holdout window covers every session; training set is empty");
    }
    let (attributes, skipped) = match &a.attributes_file {
        Some(p) => {
            let parsed = parse_attributes(open(p)?, &format, &split.train.vocab)
                .with_context(|| format!("reading {}", p.display()))?;
            (parsed.table, parsed.skipped_rows)
        }
        None => (AttributeTable::empty(split.train.num_items()), 0),
    };
    let bundle = Bundle::new(
        split,
        attributes,
        skipped,
        Preprocessing {
            min_item_count: a.min_item_count,
            min_session_len: a.min_session_len,
            filter_passes: a.filter_passes,
            holdout_seconds: holdout,
        },
    );
    bundle.save(&a.out)?;
    print!("{}", bundle.manifest.summary.to_text());
    Ok(())
}

fn score_attrs(a: ScoreArgs) -> Result<()> {
    let bundle = load_bundle(&a.bundle.bundle)?;
    let empty = match a.empty {
        EmptyArg::Zero => EmptySessions::Zero,
        EmptyArg::Skip => EmptySessions::Skip,
    };
    let report = rank_attributes(&bundle.train, &bundle.attributes, empty)?;
    print!("{}", report.to_delimited(a.delimiter));
    Ok(())
}

/// The training configuration the flags describe.
pub fn train_config(a: &TrainArgs) -> TrainConfig {
    TrainConfig {
        dim: a.dim,
        batch_size: a.batch_size,
        l2: a.l2,
        lr: a.lr,
        lr_decay: a.lr_decay,
        decay_every: a.decay_every,
        epochs: a.epochs,
        patience: (a.patience > 0).then_some(a.patience),
        seed: a.seed,
        steps: a.steps,
        attributes: Vec::new(),
        precision: match a.precision {
            PrecisionArg::F32 => Precision::F32,
            PrecisionArg::F64 => Precision::F64,
        },
        clip_norm: a.clip_norm,
        validation_fraction: a.validation_fraction,
        eval_k: a.topk,
        share_gru: !a.per_channel_gru,
        share_readout: a.shared_readout,
        attribute_init: match a.attribute_init {
            AttributeInitArg::Session => AttributeInit::SessionItems,
            AttributeInitArg::Carrying => AttributeInit::CarryingItems,
        },
        gamma_init: a.gamma_init,
        graph: GraphOptions {
            edges: match a.edge_weights {
                EdgeArg::Counts => EdgeWeighting::Counts,
                EdgeArg::Binary => EdgeWeighting::Binary,
            },
            empty: if a.break_on_empty {
                EmptyPositions::Break
            } else {
                EmptyPositions::Bridge
            },
            self_loops: if a.drop_self_loops {
                SelfLoops::Drop
            } else {
                SelfLoops::Keep
            },
        },
        ..TrainConfig::default()
    }
}

/// `None` keeps every attribute; `"none"` keeps none.
fn select_attributes(table: &AttributeTable, spec: Option<&str>) -> Result<AttributeTable> {
    let names: Vec<&str> = match spec.map(str::trim) {
        None => return Ok(table.clone()),
        Some("none") | Some("") => Vec::new(),
        Some(list) => list.split(',').map(str::trim).collect(),
    };
    table
        .select(&names)
        .map_err(|e| Failure::Usage(e.to_string()).into())
}

fn train_cmd(a: TrainArgs) -> Result<()> {
    let dir = a.bundle.bundle.clone();
    let bundle = load_bundle(&dir)?;
    let config = train_config(&a);
    config
        .validate()
        .map_err(|e| Failure::Usage(e.to_string()))?;
    let attributes = select_attributes(&bundle.attributes, a.attributes.as_deref())?;
    let out = a.out.clone().unwrap_or_else(|| dir.join("model.ckpt"));
    let log_path = a
        .log
        .clone()
        .unwrap_or_else(|| out.with_extension("metrics.csv"));
    for p in [&out, &log_path] {
        if let Some(parent) = p.parent().filter(|p| !p.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }

    let (fit, held) = holdout_latest(&bundle.train, config.validation_fraction);
    let train_examples = augment_prefixes(&fit);
    let validation = augment_prefixes(&held);
    if train_examples.is_empty() {
        return Err(Failure::Data("bundle has no training examples".into()).into());
    }
    log::info!(
        "{} training and {} validation examples, {} items, {} attribute channels",
        train_examples.len(),
        validation.len(),
        bundle.vocabulary().len(),
        attributes.k()
    );
    let data = TrainingData {
        train: &train_examples,
        validation: &validation,
        vocabulary: bundle.vocabulary(),
        attributes: &attributes,
    };
    match config.precision {
        Precision::F32 => run_training::<f32>(&data, &config, &out, &log_path),
        Precision::F64 => run_training::<f64>(&data, &config, &out, &log_path),
    }
}

fn run_training<T: Scalar>(
    data: &TrainingData,
    config: &TrainConfig,
    out: &Path,
    log_path: &Path,
) -> Result<()> {
    println!("{}", EpochRecord::csv_header(config.eval_k));
    let mut persist = |record: &EpochRecord, best: &Checkpoint<T>| -> murzim::train::Result<()> {
        println!("{}", record.csv_row());
        best.save(out)?;
        std::fs::write(log_path, metrics_log(&best.history, config.eval_k)).map_err(|source| {
            murzim::train::CheckpointError::Io {
                path: log_path.display().to_string(),
                source,
            }
        })?;
        Ok(())
    };
    let outcome = train::<T>(data, config, &mut persist)?;
    outcome.best.save(out)?;
    std::fs::write(log_path, metrics_log(&outcome.log, config.eval_k))
        .with_context(|| format!("writing {}", log_path.display()))?;
    let best = match outcome.best.best_epoch {
        Some(e) => format!("best epoch {e}"),
        None => "no epoch finished".to_string(),
    };
    match outcome.stop {
        StopReason::Completed => {
            eprintln!(
                "completed {} epochs, {best}; saved {}",
                outcome.log.len(),
                out.display()
            )
        }
        StopReason::EarlyStopped { epoch } => {
            eprintln!(
                "stopped early after epoch {epoch}, {best}; saved {}",
                out.display()
            )
        }
        StopReason::Diverged { epoch } => {
            return Err(anyhow::anyhow!(
                "training diverged in epoch {epoch}; last good checkpoint ({best}) saved to {}",
                out.display()
            ))
        }
    }
    Ok(())
}

fn load_checkpoint(path: &Path, dim: Option<usize>) -> Result<AnyCheckpoint> {
    require_file(path, "checkpoint")?;
    let ckpt = AnyCheckpoint::load(path)?;
    if let Some(d) = dim {
        match &ckpt {
            AnyCheckpoint::F32(c) => c.expect_dim(d)?,
            AnyCheckpoint::F64(c) => c.expect_dim(d)?,
        }
    }
    Ok(ckpt)
}

fn model_report<T: Scalar>(
    ckpt: &Checkpoint<T>,
    bundle: &Bundle,
    examples: &[TrainingExample],
    k: usize,
    batch_size: usize,
) -> Result<EvalReport> {
    if ckpt.vocabulary != *bundle.vocabulary() {
        return Err(Failure::Data("checkpoint vocabulary does not match the bundle".into()).into());
    }
    Ok(evaluate_model(
        "murzim",
        &ckpt.model,
        &ckpt.attributes,
        ckpt.train_config.graph,
        examples,
        k,
        batch_size,
    )?)
}

fn eval(a: EvalArgs) -> Result<()> {
    if a.checkpoint.is_none() && a.baseline.is_empty() {
        return Err(Failure::Usage(
            "nothing to evaluate: pass --checkpoint and/or --baseline".into(),
        )
        .into());
    }
    if a.topk == 0 {
        return Err(Failure::Usage("--topk must be at least 1".into()).into());
    }
    let ckpt = a
        .checkpoint
        .as_deref()
        .map(|p| load_checkpoint(p, a.dim))
        .transpose()?;
    let bundle = load_bundle(&a.bundle.bundle)?;
    let examples = bundle.test_examples();
    if examples.is_empty() {
        return Err(Failure::Data("bundle has no test examples".into()).into());
    }

    let mut reports = Vec::new();
    match &ckpt {
        Some(AnyCheckpoint::F32(c)) => {
            reports.push(model_report(c, &bundle, &examples, a.topk, a.batch_size)?)
        }
        Some(AnyCheckpoint::F64(c)) => {
            reports.push(model_report(c, &bundle, &examples, a.topk, a.batch_size)?)
        }
        None => {}
    }
    let all = a.baseline.contains(&BaselineArg::All);
    let weighting = match a.knn_weighting {
        KnnArg::Cosine => KnnWeighting::Cosine,
        KnnArg::Raw => KnnWeighting::Raw,
    };
    let mut rankers: Vec<Box<dyn Ranker>> = Vec::new();
    for b in [BaselineArg::Pop, BaselineArg::Spop, BaselineArg::Itemknn] {
        if all || a.baseline.contains(&b) {
            rankers.push(match b {
                BaselineArg::Pop => Box::new(Pop::fit(&bundle.train)),
                BaselineArg::Spop => Box::new(SPop::fit(&bundle.train)),
                _ => Box::new(ItemKnn::fit(&bundle.train, weighting)),
            });
        }
    }
    for r in &rankers {
        reports.push(evaluate_ranker(r.as_ref(), &examples, a.topk)?);
    }

    match a.format {
        FormatArg::Table => print!("{}", reports_to_table(&reports)),
        FormatArg::Csv => print!("{}", reports_to_delimited(&reports, ',')),
    }
    if let Some(path) = &a.per_example {
        write_per_example(path, &reports)?;
    }
    Ok(())
}

fn write_per_example(path: &PathBuf, reports: &[EvalReport]) -> Result<()> {
    let mut out = String::from("model,example,rank\n");
    for r in reports {
        for (i, rank) in r.ranks.iter().enumerate() {
            match rank {
                Some(rank) => out.push_str(&format!("{},{i},{rank}\n", r.name)),
                None => out.push_str(&format!("{},{i},\n", r.name)),
            }
        }
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn recommend_rows<T: Scalar>(ckpt: &Checkpoint<T>, a: &RecommendArgs) -> Result<String> {
    let prefix = a
        .items
        .iter()
        .map(|id| {
            ckpt.vocabulary
                .index_of(id)
                .ok_or_else(|| Failure::Data(format!("unknown item id {id:?}")))
        })
        .collect::<Result<Vec<_>, _>>()?;
    let top = recommend(
        &ckpt.model,
        &ckpt.attributes,
        ckpt.train_config.graph,
        &prefix,
        a.topk,
    )?;
    let d = a.delimiter;
    let mut out = format!("rank{d}item_id{d}probability\n");
    for (r, (item, p)) in top.iter().enumerate() {
        let id = ckpt.vocabulary.id(*item).expect("index within vocabulary");
        out.push_str(&format!("{}{d}{id}{d}{p}\n", r + 1));
    }
    Ok(out)
}

fn recommend_cmd(a: RecommendArgs) -> Result<()> {
    if a.topk == 0 {
        return Err(Failure::Usage("--topk must be at least 1".into()).into());
    }
    let rows = match load_checkpoint(&a.checkpoint, a.dim)? {
        AnyCheckpoint::F32(c) => recommend_rows(&c, &a)?,
        AnyCheckpoint::F64(c) => recommend_rows(&c, &a)?,
    };
    std::io::stdout().write_all(rows.as_bytes())?;
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let spec = SyntheticSpec {
        num_items: a.items,
        attribute_values: a.attribute_values,
        sessions: a.sessions,
        min_len: a.min_len,
        max_len: a.max_len,
        signal: match a.signal {
            SignalArg::Attribute => Signal::AttributeDriven {
                p: a.p,
                attribute: a.signal_attribute,
            },
            SignalArg::Markov => Signal::Markov { p: a.p },
            SignalArg::Random => Signal::Random,
        },
        seed: a.seed,
    };
    let corpus = generate(&spec).map_err(|e| Failure::Usage(e.to_string()))?;
    std::fs::create_dir_all(&a.out_dir)
        .with_context(|| format!("creating {}", a.out_dir.display()))?;
    let format = FormatConfig::default();
    let path = a.out_dir.join("sessions.csv");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_sessions(&corpus.sessions, std::io::BufWriter::new(file), &format)?;
    let path = a.out_dir.join("attributes.csv");
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_attributes(
        &corpus.attributes,
        &corpus.sessions.vocab,
        std::io::BufWriter::new(file),
        &format,
    )?;
    println!(
        "{} sessions, {} interactions, {} items",
        corpus.sessions.len(),
        corpus.sessions.interactions(),
        corpus.sessions.num_items()
    );
    Ok(())
}
