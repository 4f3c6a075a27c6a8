//! `blmix`: preprocess corpora, generate synthetic data, fit mixtures,
//! evaluate fits and sweep the Beta-Liouville `δ` knob.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "blmix", version, about = "Beta-Liouville multinomial mixtures for short-text clustering")]
struct Cli {
    /// Log more (repeat for more detail). `RUST_LOG` takes precedence.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn raw text into a document-term matrix.
    Preprocess(PreprocessArgs),
    /// Sample a synthetic corpus from the mixture model.
    Synth(SynthArgs),
    /// Fit a mixture to a document-term matrix.
    Fit(FitArgs),
    /// Score a fit: accuracy and ARI against labels, topic coherence.
    Eval(EvalArgs),
    /// Fit and evaluate over a grid of δ values.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    /// A directory of documents (one file each, with optional category
    /// subdirectories) or a text file with one document per line.
    #[arg(long)]
    pub input: PathBuf,
    /// Output directory for the matrix files.
    #[arg(long)]
    pub out: PathBuf,
    /// File with one category label per document, overriding subdirectory names.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 0.01)]
    pub min_doc_freq: f64,
    #[arg(long, default_value_t = 4)]
    pub min_token_len: usize,
    #[arg(long, default_value_t = 16)]
    pub max_token_len: usize,
    /// Keep tokens unstemmed.
    #[arg(long)]
    pub no_stem: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LengthLaw {
    Poisson,
    Fixed,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub groups: usize,
    #[arg(long)]
    pub vocab_size: usize,
    #[arg(long)]
    pub docs: usize,
    /// Mean (Poisson) or exact (fixed) document length.
    #[arg(long, default_value_t = 40)]
    pub doc_length: usize,
    #[arg(long, value_enum, default_value_t = LengthLaw::Poisson)]
    pub length_law: LengthLaw,
    /// Beta-Liouville divergence knob of the topic prior.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub delta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PriorArg {
    Bl,
    Dirichlet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AlgorithmArg {
    Svi,
    Cavi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BetaSlotArg {
    Last,
    LeastFrequent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PhiAlphaArg {
    Conjugate,
    Fixed,
}

/// Model and optimizer flags shared by `fit` and `sweep`.
#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long)]
    pub groups: usize,
    #[arg(long, value_enum, default_value_t = PriorArg::Bl)]
    pub prior: PriorArg,
    #[arg(long, value_enum, default_value_t = AlgorithmArg::Svi)]
    pub algorithm: AlgorithmArg,
    #[arg(long, default_value_t = 0.6)]
    pub kappa: f64,
    #[arg(long, default_value_t = 5000)]
    pub iters: usize,
    #[arg(long, default_value_t = 30)]
    pub restarts: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 50)]
    pub elbo_every: usize,
    /// Relative ELBO change that stops CAVI.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long, value_enum, default_value_t = BetaSlotArg::Last)]
    pub beta_slot: BetaSlotArg,
    /// How the generator parameter of each topic factor is updated.
    #[arg(long, value_enum, default_value_t = PhiAlphaArg::Conjugate)]
    pub phi_alpha: PhiAlphaArg,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Directory with the matrix files.
    #[arg(long)]
    pub dtm: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Beta-Liouville divergence knob (`α = α₀(1 + δ)`); default 0.
    #[arg(long, allow_hyphen_values = true)]
    pub delta: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// A `fit.json` written by `blmix fit`.
    #[arg(long)]
    pub fit: PathBuf,
    #[arg(long)]
    pub dtm: PathBuf,
    /// Labels file; defaults to the matrix directory's labels, if any.
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// Number of top terms per topic.
    #[arg(long, default_value_t = 10)]
    pub top: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long)]
    pub dtm: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Comma-separated δ values.
    #[arg(
        long,
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "0,-0.05,0.05,-0.1,0.1,-0.2,0.2,-0.3,0.3,-0.4,0.4,-0.5,0.5"
    )]
    pub deltas: Vec<f64>,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    pub top: usize,
}

/// Failure of a command, mapped to the process exit status.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags or unusable input paths: exit status 2.
    Usage(String),
    /// Anything that went wrong while running: exit status 1.
    Runtime(String),
}

impl From<blmix::Error> for CliError {
    fn from(e: blmix::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let result = match &cli.command {
        Command::Preprocess(a) => commands::preprocess(a),
        Command::Synth(a) => commands::synth(a),
        Command::Fit(a) => commands::fit(a),
        Command::Eval(a) => commands::eval(a),
        Command::Sweep(a) => commands::sweep(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
