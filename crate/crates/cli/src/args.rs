use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "ipvote", version, about = "F1-weighted soft-voting ensembles for binary tweet classification")]
pub struct Cli {
    /// Root directory; relative paths resolve against it and every path must stay inside it.
    #[arg(long, global = true, default_value = ".")]
    pub workspace: PathBuf,

    /// Base seed for data generation and member training.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print class frequencies for one or more labeled corpora.
    Stats(StatsArgs),
    /// Write a seeded synthetic train/validation corpus pair.
    Synth(SynthArgs),
    /// Train k hashed n-gram members with best-epoch selection.
    Train(TrainArgs),
    /// Write a probability table for each model over a corpus.
    Predict(PredictArgs),
    /// Fit per-member weights (validation F1) and write the ensemble spec.
    FitWeights(FitWeightsArgs),
    /// Combine member tables, write verdicts and an evaluation report.
    Ensemble(EnsembleArgs),
    /// Render a report from a verdict file and a labeled corpus.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Tsv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Select {
    F1,
    Accuracy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Soft,
    Hard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Weighting {
    /// Each member weighted by its validation F1.
    F1,
    /// Every member weighted 1.
    Equal,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(required = true)]
    pub corpus: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 2000)]
    pub train_size: usize,
    #[arg(long, default_value_t = 500)]
    pub validation_size: usize,
    #[arg(long, default_value_t = 0.11)]
    pub positive_rate: f64,
    /// Probability that a cue token comes from the opposite class.
    #[arg(long, default_value_t = 0.2)]
    pub flip_rate: f64,
    #[arg(long, default_value = "train.tsv")]
    pub train_out: PathBuf,
    #[arg(long, default_value = "validation.tsv")]
    pub validation_out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub train: PathBuf,
    #[arg(long)]
    pub validation: PathBuf,
    /// Number of members; member i uses seed + i.
    #[arg(long, default_value_t = 5)]
    pub members: usize,
    #[arg(long, value_enum, default_value_t = Select::F1)]
    pub select: Select,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = 0.1)]
    pub learning_rate: f64,
    #[arg(long, default_value_t = 1e-4)]
    pub l2: f64,
    #[arg(long, default_value = "members")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long = "model", required = true, num_args = 1..)]
    pub models: Vec<PathBuf>,
    /// Labeled or unlabeled corpus; the header decides which.
    #[arg(long)]
    pub corpus: PathBuf,
    #[arg(long, default_value = "predictions")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct FitWeightsArgs {
    #[arg(long)]
    pub validation: PathBuf,
    /// Member probability tables over the validation corpus.
    #[arg(long = "probs", required = true, num_args = 1..)]
    pub probs: Vec<PathBuf>,
    #[arg(long, default_value = "ensemble/spec.tsv")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EnsembleArgs {
    /// Labeled validation corpus used to fit weights and summarize member F1.
    #[arg(long)]
    pub validation: PathBuf,
    /// Member probability tables over the validation corpus.
    #[arg(long = "probs", required = true, num_args = 1..)]
    pub probs: Vec<PathBuf>,
    /// Corpus to evaluate; defaults to the validation corpus.
    #[arg(long)]
    pub eval: Option<PathBuf>,
    /// Member probability tables over the evaluated corpus.
    #[arg(long = "eval-probs", num_args = 1..)]
    pub eval_probs: Vec<PathBuf>,
    #[arg(long, value_enum, default_value_t = Mode::Soft)]
    pub mode: Mode,
    #[arg(long, value_enum, default_value_t = Weighting::F1)]
    pub weighting: Weighting,
    /// Use a previously fitted spec instead of fitting one.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value = "ensemble")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub verdicts: PathBuf,
    /// Labeled corpus the verdicts were produced for.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Optional member tables over `--validation` for the member F1 summary.
    #[arg(long = "member-probs", requires = "validation", num_args = 1..)]
    pub member_probs: Vec<PathBuf>,
    #[arg(long)]
    pub validation: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long, value_enum, default_value_t = Format::Text)]
    pub format: Format,
}
