mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::{CliError, Kind};

/// Channel-image pipeline: surrogate data, codec, generative models and
/// evaluation.
#[derive(Debug, Parser)]
#[command(name = "chanimg", version)]
pub struct Cli {
    /// TOML experiment configuration.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for every random draw; defaults to the configuration seed or 0.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a surrogate link dataset (JSON Lines).
    GenData(GenData),
    /// Fit the codec (virtual-path ranges and scaler) on a dataset.
    FitCodec(FitCodec),
    /// Encode a dataset into a channel-image tensor file.
    Encode(Encode),
    /// Decode a channel-image tensor file back into links.
    Decode(Decode),
    /// Train a generative backend on a channel-image tensor file.
    Train(Train),
    /// Sample images under the conditions of a dataset.
    Sample(Sample),
    /// Compare decoded model links against a reference dataset.
    Eval(Eval),
    /// Write the statistics reports of one dataset.
    Report(Report),
}

#[derive(Debug, Args)]
pub struct GenData {
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Number of links; sites per transmitter are derived from it.
    #[arg(long)]
    pub links: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitCodec {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Encode {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub codec: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Decode {
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub codec: Option<PathBuf>,
    /// Links supplying the geometry; image `i` pairs with link `i / repeat`.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Per-link round-trip error CSV against the geometry links.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Backend {
    WganGp,
    Resampler,
}

#[derive(Debug, Args)]
pub struct Train {
    #[arg(long, value_enum)]
    pub backend: Backend,
    #[arg(long)]
    pub images: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Training log CSV (WGAN-GP only).
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct Sample {
    #[arg(long)]
    pub checkpoint: Option<PathBuf>,
    /// Links whose conditions are sampled.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub per_link: Option<usize>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct Eval {
    /// Decoded model links.
    #[arg(long)]
    pub model: PathBuf,
    /// Reference links.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct Report {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let first = e.to_string();
            let first = first.lines().next().unwrap_or("invalid arguments");
            let first = first.trim_start_matches("error: ");
            eprintln!("{}", CliError::usage(first));
            return ExitCode::from(Kind::Usage.exit_code() as u8);
        }
        Err(e) => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.kind.exit_code() as u8)
        }
    }
}
