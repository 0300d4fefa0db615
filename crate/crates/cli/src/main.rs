use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use mirth::datasets::Task;
use mirth::{Error, ErrorKind};

mod commands;

/// Dutch humor-detection benchmark harness.
#[derive(Debug, Parser)]
#[command(name = "mirth", version, propagate_version = true)]
struct Cli {
    /// Log filter (error, warn, info, debug, trace).
    #[arg(long, global = true, env = "MIRTH_LOG", default_value = "warn")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Read a one-text-per-line corpus into a documents file.
    Ingest(IngestArgs),
    /// Train the POS tagger on a CoNLL-U treebank.
    TrainTagger(TrainTaggerArgs),
    /// POS-tag a corpus.
    Tag(TagArgs),
    /// Generate dynamic-template negatives for a joke corpus.
    GenerateNegatives(GenerateArgs),
    /// Label, balance and split jokes and non-jokes.
    MakeDataset(MakeDatasetArgs),
    /// Train one model on a dataset directory.
    Train(TrainArgs),
    /// Random hyperparameter search for a neural model.
    Search(SearchArgs),
    /// Evaluate a trained model on one split.
    Eval(EvalArgs),
    /// Fraction of a foreign corpus a model labels as jokes.
    CrossDomain(CrossDomainArgs),
    /// Score a predictions file produced by an external model.
    ScoreExternal(ScoreExternalArgs),
    /// Write a seeded synthetic corpus, treebank and embeddings.
    SynthCorpus(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Nb,
    Cnn,
    Lstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeuralKind {
    Cnn,
    Lstm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskArg {
    Single,
    Pairwise,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Single => Task::Single,
            TaskArg::Pairwise => Task::Pairwise,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitArg {
    Train,
    Valid,
    Test,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OovArg {
    Zero,
    Mean,
}

#[derive(Debug, Args, Serialize)]
pub struct IngestArgs {
    #[arg(long = "in", env = "MIRTH_IN")]
    input: PathBuf,
    /// Source name used in document ids.
    #[arg(long, env = "MIRTH_SOURCE")]
    source: String,
    #[arg(long, env = "MIRTH_OUT")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainTaggerArgs {
    #[arg(long, env = "MIRTH_CONLLU")]
    conllu: PathBuf,
    #[arg(long, env = "MIRTH_OUT")]
    out: PathBuf,
    #[arg(long, env = "MIRTH_EPOCHS", default_value_t = 5)]
    epochs: usize,
    #[arg(long, env = "MIRTH_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TagArgs {
    #[arg(long, env = "MIRTH_MODEL")]
    model: PathBuf,
    /// Text lines or a documents JSONL file.
    #[arg(long = "in", env = "MIRTH_IN")]
    input: PathBuf,
    #[arg(long, env = "MIRTH_OUT")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct GenerateArgs {
    #[arg(long, env = "MIRTH_JOKES")]
    jokes: PathBuf,
    #[arg(long, env = "MIRTH_TAGGER")]
    tagger: PathBuf,
    #[arg(long, env = "MIRTH_SEED", default_value_t = 1)]
    seed: u64,
    /// Words at or below this frequency percentile may be replaced.
    #[arg(long, env = "MIRTH_PERCENTILE", default_value_t = 0.62)]
    percentile: f64,
    /// At least one replacement per this many characters.
    #[arg(long, env = "MIRTH_CHARS_PER_REPL", default_value_t = 25)]
    chars_per_repl: usize,
    /// Context jokes sampled for replacement words.
    #[arg(long, env = "MIRTH_CONTEXT", default_value_t = 3)]
    context: usize,
    /// Context resamples before a slot is skipped.
    #[arg(long, env = "MIRTH_RESAMPLES", default_value_t = 5)]
    resamples: usize,
    #[arg(long, env = "MIRTH_OUT")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct MakeDatasetArgs {
    #[arg(long, env = "MIRTH_JOKES")]
    jokes: PathBuf,
    /// Generated negatives (JSONL) or a foreign-domain corpus.
    #[arg(long, env = "MIRTH_NONJOKES")]
    nonjokes: PathBuf,
    /// Source name for a foreign-domain corpus; defaults to the file stem.
    #[arg(long, env = "MIRTH_NONJOKE_SOURCE")]
    nonjoke_source: Option<String>,
    #[arg(long, env = "MIRTH_TASK", value_enum, default_value_t = TaskArg::Single)]
    task: TaskArg,
    #[arg(long, env = "MIRTH_SEED", default_value_t = 1)]
    seed: u64,
    #[arg(long, env = "MIRTH_RATIOS", default_value = "0.7,0.15,0.15")]
    ratios: String,
    #[arg(long, env = "MIRTH_OUT")]
    out: PathBuf,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct NeuralOptions {
    #[arg(long, env = "MIRTH_EMBEDDINGS")]
    embeddings: Option<PathBuf>,
    #[arg(long, env = "MIRTH_OOV", value_enum, default_value_t = OovArg::Zero)]
    oov: OovArg,
    #[arg(long, env = "MIRTH_EPOCHS", default_value_t = 15)]
    epochs: usize,
    #[arg(long, env = "MIRTH_BATCH_SIZE", default_value_t = 64)]
    batch_size: usize,
    #[arg(long, env = "MIRTH_DROPOUT", default_value_t = 0.1)]
    dropout: f64,
    #[arg(long, env = "MIRTH_CHANNELS", default_value_t = 64)]
    channels: usize,
    #[arg(long, env = "MIRTH_MAX_SEQ_LEN", default_value_t = 64)]
    max_seq_len: usize,
    /// Seed for initialization, shuffling and dropout.
    #[arg(long, env = "MIRTH_SEED", default_value_t = 1)]
    seed: u64,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long, env = "MIRTH_MODEL", value_enum)]
    model: ModelKind,
    #[arg(long, env = "MIRTH_DATA")]
    data: PathBuf,
    /// Must match the dataset manifest when given.
    #[arg(long, env = "MIRTH_TASK", value_enum)]
    task: Option<TaskArg>,
    #[arg(long, env = "MIRTH_OUT")]
    out: PathBuf,
    #[arg(long, env = "MIRTH_LR", default_value_t = 0.01)]
    lr: f64,
    #[arg(long, env = "MIRTH_HIDDEN_DIM", default_value_t = 32)]
    hidden_dim: usize,
    /// Naive Bayes smoothing.
    #[arg(long, env = "MIRTH_ALPHA", default_value_t = 1.0)]
    alpha: f64,
    #[command(flatten)]
    #[serde(flatten)]
    neural: NeuralOptions,
}

#[derive(Debug, Args, Serialize)]
pub struct SearchArgs {
    #[arg(long, env = "MIRTH_MODEL", value_enum)]
    model: NeuralKind,
    #[arg(long, env = "MIRTH_TRIALS", default_value_t = 10)]
    trials: usize,
    #[arg(long, env = "MIRTH_DATA")]
    data: PathBuf,
    #[arg(long, env = "MIRTH_OUT")]
    out: PathBuf,
    /// Seed for sampling trial hyperparameters.
    #[arg(long, env = "MIRTH_SEARCH_SEED", default_value_t = 1)]
    search_seed: u64,
    #[arg(long, env = "MIRTH_LR_MIN", default_value_t = 1e-3)]
    lr_min: f64,
    #[arg(long, env = "MIRTH_LR_MAX", default_value_t = 1e-1)]
    lr_max: f64,
    #[command(flatten)]
    #[serde(flatten)]
    neural: NeuralOptions,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long, env = "MIRTH_MODEL_DIR")]
    model_dir: PathBuf,
    #[arg(long, env = "MIRTH_DATA")]
    data: PathBuf,
    #[arg(long, env = "MIRTH_SPLIT", value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    /// Write the report as JSON.
    #[arg(long, env = "MIRTH_OUT")]
    out: Option<PathBuf>,
    /// Write per-example predictions as JSONL.
    #[arg(long, env = "MIRTH_PREDICTIONS")]
    predictions: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct CrossDomainArgs {
    #[arg(long, env = "MIRTH_MODEL_DIR")]
    model_dir: PathBuf,
    #[arg(long, env = "MIRTH_CORPUS")]
    corpus: PathBuf,
    #[arg(long, env = "MIRTH_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ScoreExternalArgs {
    #[arg(long, env = "MIRTH_PREDS")]
    preds: PathBuf,
    #[arg(long, env = "MIRTH_DATA")]
    data: PathBuf,
    #[arg(long, env = "MIRTH_SPLIT", value_enum, default_value_t = SplitArg::Test)]
    split: SplitArg,
    #[arg(long, env = "MIRTH_OUT")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, env = "MIRTH_OUT")]
    out: PathBuf,
    #[arg(long, env = "MIRTH_SYNTH_JOKES", default_value_t = 2000)]
    jokes: usize,
    #[arg(long, env = "MIRTH_SYNTH_NEWS", default_value_t = 2000)]
    news: usize,
    #[arg(long, env = "MIRTH_SYNTH_PROVERBS", default_value_t = 150)]
    proverbs: usize,
    #[arg(long, env = "MIRTH_SYNTH_TREEBANK", default_value_t = 1500)]
    treebank: usize,
    #[arg(long, env = "MIRTH_SYNTH_DIM", default_value_t = 32)]
    dim: usize,
    #[arg(long, env = "MIRTH_SYNTH_ZIPF", default_value_t = 0.7)]
    zipf: f64,
    #[arg(long, env = "MIRTH_SEED", default_value_t = 1)]
    seed: u64,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Usage => 1,
        ErrorKind::Data => 2,
        ErrorKind::Runtime => 3,
    }
}

fn run(command: Command) -> Result<(), Error> {
    match command {
        Command::Ingest(a) => commands::ingest(&a),
        Command::TrainTagger(a) => commands::train_tagger(&a),
        Command::Tag(a) => commands::tag(&a),
        Command::GenerateNegatives(a) => commands::generate_negatives(&a),
        Command::MakeDataset(a) => commands::make_dataset(&a),
        Command::Train(a) => commands::train(&a),
        Command::Search(a) => commands::search(&a),
        Command::Eval(a) => commands::eval(&a),
        Command::CrossDomain(a) => commands::cross_domain(&a),
        Command::ScoreExternal(a) => commands::score_external(&a),
        Command::SynthCorpus(a) => commands::synth_corpus(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    env_logger::Builder::new()
        .parse_filters(&cli.log)
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(e.kind()))
        }
    }
}
