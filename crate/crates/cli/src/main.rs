//! `vcfp` command-line driver.

mod commands;
mod config;
mod plot;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use vcfp::classic::ClassifierKind;
use vcfp::preprocess::{Format, Keep};

const EXIT_VALIDATION: u8 = 2;
const EXIT_IO: u8 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "vcfp",
    version,
    about = "Voice-command traffic fingerprinting workbench"
)]
pub struct Cli {
    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// JSON pipeline configuration.
    #[arg(long, global = true, value_name = "JSON")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a synthetic labelled dataset.
    Generate(GenerateArgs),
    /// Packet-size and interarrival histograms of a dataset.
    Stats(InputArgs),
    /// Stratified fold plan and a min-max scaler fitted on one fold.
    Preprocess(PreprocessArgs),
    /// Train or apply a classic classifier.
    #[command(subcommand)]
    Attack(AttackCommand),
    /// Obfuscate a dataset with adaptive padding and size noise.
    Defend(DefendArgs),
    /// Score a probability file against dataset labels.
    Evaluate(EvaluateArgs),
    /// Write classifier inputs as a tensor file plus labels.
    ExportTensors(ExportArgs),
    /// Combine probability files with accuracy-proportional weights.
    Ensemble(EnsembleArgs),
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Trace file (JSON lines).
    #[arg(long)]
    pub input: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct Selection {
    /// Fold plan written by `preprocess`.
    #[arg(long)]
    pub split: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub fold: usize,
    #[arg(long, value_enum, default_value_t = Part::All)]
    pub part: Part,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Part {
    All,
    Train,
    Validation,
    TrainValidation,
    Test,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long)]
    pub classes: Option<usize>,
    #[arg(long)]
    pub traces_per_class: Option<usize>,
    #[arg(long)]
    pub noise: Option<f64>,
    #[arg(long)]
    pub unmonitored: Option<usize>,
    #[arg(long, default_value = "traces.jsonl")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Fold whose training part fits the scaler.
    #[arg(long, default_value_t = 0)]
    pub fold: usize,
    #[command(flatten)]
    pub encode: EncodeArgs,
}

#[derive(Args, Debug, Clone, Default)]
pub struct EncodeArgs {
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    #[arg(long, value_enum)]
    pub keep: Option<KeepArg>,
    #[arg(long)]
    pub length: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FormatArg {
    Binary,
    Numeric,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Binary => Format::Binary,
            FormatArg::Numeric => Format::Numeric,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum KeepArg {
    Both,
    Incoming,
    Outgoing,
}

impl From<KeepArg> for Keep {
    fn from(k: KeepArg) -> Self {
        match k {
            KeepArg::Both => Keep::Both,
            KeepArg::Incoming => Keep::Incoming,
            KeepArg::Outgoing => Keep::Outgoing,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    Adaboost,
    LinearOvr,
    OneNn,
}

impl From<ModelArg> for ClassifierKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Adaboost => ClassifierKind::AdaBoost,
            ModelArg::LinearOvr => ClassifierKind::LinearOvr,
            ModelArg::OneNn => ClassifierKind::OneNn,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FeaturesArg {
    Cumul,
    Cns19,
}

#[derive(Subcommand, Debug)]
pub enum AttackCommand {
    /// Fit a classifier and write it as model JSON.
    Train(TrainArgs),
    /// Apply a saved model and write a probability file.
    Predict(PredictArgs),
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub model: ModelArg,
    #[arg(long, value_enum, default_value_t = FeaturesArg::Cumul)]
    pub features: FeaturesArg,
    #[arg(long, value_enum, default_value_t = KeepArg::Both)]
    pub keep: KeepArg,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long, default_value = "model.json")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long, default_value = "probs.csv")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct DefendArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Noise budget; `inf` disables noise.
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Summary statistics from `stats`; computed from the input when absent.
    #[arg(long)]
    pub stats: Option<PathBuf>,
    #[arg(long, default_value = "obfuscated.jsonl")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub probs: PathBuf,
    #[command(flatten)]
    pub selection: Selection,
    /// Open-world decision threshold on the best monitored-class probability.
    #[arg(long, default_value_t = 0.5)]
    pub threshold: f64,
    /// Learning-curve plot (accuracy vs traces per class) as SVG.
    #[arg(long)]
    pub plot: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ModelArg::LinearOvr)]
    pub curve_model: ModelArg,
    #[arg(long, value_enum, default_value_t = FeaturesArg::Cumul)]
    pub curve_features: FeaturesArg,
    #[arg(long, value_delimiter = ',', default_value = "5,10,20,40,80")]
    pub curve_sizes: Vec<usize>,
}

#[derive(Args, Debug)]
pub struct ExportArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Scaler JSON from `preprocess`; fitted on the selection when absent.
    #[arg(long)]
    pub scaler: Option<PathBuf>,
    #[command(flatten)]
    pub selection: Selection,
    #[command(flatten)]
    pub encode: EncodeArgs,
    #[arg(long, default_value = "tensors")]
    pub name: String,
}

#[derive(Args, Debug)]
pub struct EnsembleArgs {
    /// Probability files, one per model.
    #[arg(long = "probs", required = true)]
    pub probs: Vec<PathBuf>,
    /// Validation accuracy per model; uniform weights when absent.
    #[arg(long, value_delimiter = ',')]
    pub accuracies: Vec<f64>,
    /// Dataset for labels; when given, the combined predictions are scored.
    #[arg(long)]
    pub input: Option<PathBuf>,
    #[command(flatten)]
    pub selection: Selection,
    #[arg(long, default_value = "ensemble.csv")]
    pub name: String,
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<vcfp::Error>() {
            return if e.is_io() { EXIT_IO } else { EXIT_VALIDATION };
        }
        if cause.is::<std::io::Error>() {
            return EXIT_IO;
        }
    }
    EXIT_VALIDATION
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
