use clap::{Args, Parser, Subcommand, ValueEnum};
use std::path::PathBuf;

/// Session-based next-item recommendation with attribute-augmented graph
/// neural networks.
#[derive(Debug, Parser)]
#[command(name = "murzim", version)]
pub struct Cli {
    /// Log more detail to stderr (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Preprocess raw session and attribute files into a dataset bundle.
    Ingest(IngestArgs),
    /// Score every bundle attribute by within-session value concentration.
    ScoreAttrs(ScoreArgs),
    /// Train a model on a bundle's training sessions.
    Train(TrainArgs),
    /// Report Recall@K and MRR@K on a bundle's test sessions.
    Eval(EvalArgs),
    /// Print the most likely next items after a sequence of item ids.
    Recommend(RecommendArgs),
    /// Write a synthetic corpus as raw session and attribute files.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
pub struct BundleArg {
    /// Dataset bundle directory.
    #[arg(long, env = "MURZIM_DATA_DIR")]
    pub bundle: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Sessions file with session, item and timestamp columns.
    #[arg(long)]
    pub sessions: PathBuf,
    /// Attributes file with item, attribute and value columns.
    #[arg(long)]
    pub attributes_file: Option<PathBuf>,
    /// Output bundle directory.
    #[arg(long, env = "MURZIM_DATA_DIR")]
    pub out: PathBuf,
    /// Drop items occurring fewer times than this.
    #[arg(long, default_value_t = 3)]
    pub min_item_count: usize,
    /// Drop sessions shorter than this.
    #[arg(long, default_value_t = 2)]
    pub min_session_len: usize,
    /// Limit item/session filtering to this many passes instead of
    /// repeating until nothing changes.
    #[arg(long)]
    pub filter_passes: Option<usize>,
    /// Sessions ending within this window before the latest timestamp form
    /// the test set, e.g. `1d`, `7d`, `3600`.
    #[arg(long, default_value = "1d")]
    pub holdout: String,
    /// Input field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    #[arg(long, default_value = "session_id")]
    pub session_column: String,
    #[arg(long, default_value = "item_id")]
    pub item_column: String,
    #[arg(long, default_value = "timestamp")]
    pub time_column: String,
    #[arg(long, default_value = "attribute")]
    pub attribute_column: String,
    #[arg(long, default_value = "value")]
    pub value_column: String,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EmptyArg {
    /// Sessions with no values count as 0.
    Zero,
    /// Sessions with no values are left out.
    Skip,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// Output field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Treatment of sessions whose items carry no value.
    #[arg(long, value_enum, default_value_t = EmptyArg::Zero)]
    pub empty: EmptyArg,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum PrecisionArg {
    #[value(name = "32")]
    F32,
    #[value(name = "64")]
    F64,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum AttributeInitArg {
    /// Average over all items of the session.
    Session,
    /// Average over the items carrying the value.
    Carrying,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum EdgeArg {
    Counts,
    Binary,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// Checkpoint path [default: <bundle>/model.ckpt].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Metrics log path [default: checkpoint path with extension .metrics.csv].
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Comma-separated attribute names to model, or `none` [default: all].
    #[arg(long)]
    pub attributes: Option<String>,
    #[arg(long, default_value_t = 64)]
    pub dim: usize,
    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,
    #[arg(long, default_value_t = 0.004)]
    pub lr: f64,
    /// Multiplier applied to the learning rate every `--decay-every` epochs.
    #[arg(long, default_value_t = 0.1)]
    pub lr_decay: f64,
    #[arg(long, default_value_t = 2)]
    pub decay_every: usize,
    #[arg(long, default_value_t = 1e-5)]
    pub l2: f64,
    #[arg(long, default_value_t = 10)]
    pub epochs: usize,
    /// Epochs without validation improvement before stopping; 0 disables.
    #[arg(long, default_value_t = 3)]
    pub patience: usize,
    /// Gated propagation steps.
    #[arg(long, default_value_t = 1)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = PrecisionArg::F32)]
    pub precision: PrecisionArg,
    /// Rescale gradients whose global norm exceeds this.
    #[arg(long)]
    pub clip_norm: Option<f64>,
    /// Fraction of the latest training sessions used for model selection;
    /// 0 selects on the training prefixes.
    #[arg(long, default_value_t = 0.1)]
    pub validation_fraction: f64,
    /// Cutoff of the validation metrics.
    #[arg(long, default_value_t = 20)]
    pub topk: usize,
    /// Give each attribute channel its own GRU.
    #[arg(long)]
    pub per_channel_gru: bool,
    /// Share one readout across all channels.
    #[arg(long)]
    pub shared_readout: bool,
    #[arg(long, value_enum, default_value_t = AttributeInitArg::Session)]
    pub attribute_init: AttributeInitArg,
    /// Initial scale of the cosine logits.
    #[arg(long, default_value_t = 10.0)]
    pub gamma_init: f64,
    #[arg(long, value_enum, default_value_t = EdgeArg::Counts)]
    pub edge_weights: EdgeArg,
    /// Break graph chains at items without an attribute value instead of
    /// bridging over them.
    #[arg(long)]
    pub break_on_empty: bool,
    /// Leave out edges from a node to itself.
    #[arg(long)]
    pub drop_self_loops: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum BaselineArg {
    Pop,
    Spop,
    Itemknn,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KnnArg {
    Cosine,
    Raw,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Table,
    Csv,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[command(flatten)]
    pub bundle: BundleArg,
    /// Trained model to evaluate.
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Baselines to evaluate alongside (repeatable or comma-separated).
    #[arg(long, value_enum, value_delimiter = ',')]
    pub baseline: Vec<BaselineArg>,
    #[arg(long, value_enum, default_value_t = KnnArg::Cosine)]
    pub knn_weighting: KnnArg,
    #[arg(long, default_value_t = 20)]
    pub topk: usize,
    /// Expected embedding dimension of the checkpoint.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long, default_value_t = 512)]
    pub batch_size: usize,
    #[arg(long, value_enum, default_value_t = FormatArg::Table)]
    pub format: FormatArg,
    /// Write per-example label ranks to this file.
    #[arg(long)]
    pub per_example: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RecommendArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub topk: usize,
    /// Expected embedding dimension of the checkpoint.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Output field delimiter.
    #[arg(long, default_value_t = ',')]
    pub delimiter: char,
    /// Item ids of the session so far, oldest first.
    #[arg(required = true)]
    pub items: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SignalArg {
    /// Next item shares the current item's attribute value with probability `--p`.
    Attribute,
    /// Next item is the current item's fixed successor with probability `--p`.
    Markov,
    /// Next item is uniform.
    Random,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Directory receiving sessions.csv and attributes.csv.
    #[arg(long)]
    pub out_dir: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub items: usize,
    /// Number of values of each attribute, comma-separated.
    #[arg(long, value_delimiter = ',', default_value = "10")]
    pub attribute_values: Vec<usize>,
    #[arg(long, default_value_t = 5000)]
    pub sessions: usize,
    #[arg(long, default_value_t = 2)]
    pub min_len: usize,
    #[arg(long, default_value_t = 10)]
    pub max_len: usize,
    #[arg(long, value_enum, default_value_t = SignalArg::Attribute)]
    pub signal: SignalArg,
    /// Signal strength.
    #[arg(long, default_value_t = 0.9)]
    pub p: f64,
    /// Attribute carrying the signal.
    #[arg(long, default_value_t = 0)]
    pub signal_attribute: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}
