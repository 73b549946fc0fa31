//! `encdi` command-line tool.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use encdi::Error;

#[derive(Debug, Parser)]
#[command(name = "encdi", version, about = "Dataset inference and similarity forensics for encoder representations")]
struct Cli {
    /// Worker threads (defaults to all cores). Results do not depend on it.
    #[arg(long, global = true, env = "ENCODER_DI_THREADS", value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// Report format.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Json,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic victim/stolen/independent world.
    SynthGen(SynthGenArgs),
    /// Test whether a suspect's representations carry the private-set footprint.
    Infer(InferArgs),
    /// Cosine, l2 score and lp distances between two aligned sets.
    Similarity(SimilarityArgs),
    /// Entropy of one set, mutual information of two, or the normalized score.
    Entropy(EntropyArgs),
    /// Apply a shuffle, pad or affine transform to a set.
    Obfuscate(ObfuscateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum CovFlag {
    Diag,
    Full,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum StealMapFlag {
    Orthogonal,
    RandomLinear,
    Identity,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObfKindFlag {
    Shuffle,
    Pad,
    Transform,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum PadModeFlag {
    Append,
    RandomPositions,
}

fn parse_rho(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v <= 1.0 {
        Ok(v)
    } else {
        Err(format!("--rho must lie in (0, 1], got {s}"))
    }
}

fn parse_non_negative(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(format!("must be finite and non-negative, got {s}"))
    }
}

fn parse_alpha(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err(format!("--alpha must lie in (0, 1), got {s}"))
    }
}

fn parse_count(s: &str) -> Result<usize, String> {
    let v: usize = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1 {
        Ok(v)
    } else {
        Err("must be at least 1".into())
    }
}

#[derive(Debug, Args)]
pub struct SynthGenArgs {
    #[arg(long, default_value_t = 64, value_parser = parse_count)]
    pub dim: usize,
    #[arg(long, default_value_t = 8, value_parser = parse_count)]
    pub clusters: usize,
    /// Training-split concentration; 1 means no membership gap.
    #[arg(long, default_value_t = 0.9, value_parser = parse_rho)]
    pub rho: f64,
    #[arg(long, default_value_t = 0.1, value_parser = parse_non_negative)]
    pub steal_noise: f64,
    #[arg(long, value_enum, default_value_t = StealMapFlag::Orthogonal)]
    pub steal_map: StealMapFlag,
    #[arg(long, default_value_t = 2000)]
    pub n_p1: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_p2: usize,
    #[arg(long, default_value_t = 2000)]
    pub n_n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InferArgs {
    /// Suspect representations of the private split scored against held-out data.
    #[arg(long)]
    pub p1: PathBuf,
    /// Suspect representations of the private split used to fit the density.
    #[arg(long)]
    pub p2: PathBuf,
    /// Suspect representations of held-out data.
    #[arg(long)]
    pub n: PathBuf,
    /// Mixture components (default 10, or 50 above 512 dimensions).
    #[arg(long, value_parser = parse_count)]
    pub k: Option<usize>,
    /// Covariance structure (default full, or diag above 512 dimensions).
    #[arg(long, value_enum)]
    pub cov: Option<CovFlag>,
    #[arg(long, default_value_t = 200, value_parser = parse_count)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1, value_parser = parse_count)]
    pub n_init: usize,
    /// Standardize with statistics fitted on P2 before normalizing.
    #[arg(long)]
    pub standardize: bool,
    #[arg(long, default_value_t = 0.05, value_parser = parse_alpha)]
    pub alpha: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value = "suspect")]
    pub label: String,
    /// Also write the per-point log-likelihoods and fit trace here.
    #[arg(long)]
    pub audit: Option<PathBuf>,
    /// Write the report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SimilarityArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Skip row centering and normalization.
    #[arg(long)]
    pub raw: bool,
    /// Histogram of per-pair |cosine| over [0, 1] as CSV.
    #[arg(long)]
    pub histogram: Option<PathBuf>,
    #[arg(long, default_value_t = 20, value_parser = parse_count)]
    pub bins: usize,
    /// Per-pair |cosine| and l2 score as CSV.
    #[arg(long)]
    pub per_pair: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EntropyArgs {
    /// One set for its entropy, two aligned sets for their mutual information.
    #[arg(num_args = 1..=2, required = true)]
    pub inputs: Vec<PathBuf>,
    /// Report the normalized score of the second set against the first.
    #[arg(long)]
    pub mi_score: bool,
    /// Randomly initialized encoder's representations for the score's floor;
    /// standard normal rows drawn from --seed when absent.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    /// Use rows as given instead of centering and normalizing them.
    #[arg(long)]
    pub raw: bool,
    /// Keep columns that are constant across rows.
    #[arg(long)]
    pub keep_constant_columns: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ObfuscateArgs {
    pub input: PathBuf,
    #[arg(long, value_enum)]
    pub kind: ObfKindFlag,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output dimension for pad.
    #[arg(long)]
    pub pad_dim: Option<usize>,
    #[arg(long, value_enum, default_value_t = PadModeFlag::Append)]
    pub pad_mode: PadModeFlag,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub scale: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub offset: f64,
    /// Output REPR file.
    #[arg(long)]
    pub out: PathBuf,
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::IoFailure(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let Format::Json = cli.format;
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(usize::from(n)).build_global() {
            eprintln!("error: could not start {n} threads: {e}");
            return ExitCode::from(2);
        }
    }
    let result = match &cli.command {
        Command::SynthGen(a) => commands::synth_gen(a),
        Command::Infer(a) => commands::infer(a),
        Command::Similarity(a) => commands::similarity(a),
        Command::Entropy(a) => commands::entropy(a),
        Command::Obfuscate(a) => commands::obfuscate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
