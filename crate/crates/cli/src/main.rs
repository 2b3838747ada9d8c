mod analyze;
mod ingest;
mod plots;
mod run;
mod superdistrict;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "redist", version, about = "Districting ensembles: ingest, sample, analyze")]
struct Cli {
    /// Directory that receives all output files.
    #[arg(long, global = true, env = "REDIST_OUT_DIR", default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a precinct graph, merge defective precincts and write a bundle.
    Ingest(IngestArgs),
    /// Run one or more Markov chains and stream their ensembles.
    Run(RunArgs),
    /// Compare an enacted plan against ensemble files.
    Analyze(AnalyzeArgs),
    /// Build a two-district Democratic-majority super district and split it.
    Superdistrict(SuperdistrictArgs),
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub graph: PathBuf,
    /// Plan to check against the graph and carry into the bundle.
    #[arg(long)]
    pub plan: Option<PathBuf>,
    /// `id,pieces` file listing enclosed (1) or disconnected (2+) precincts.
    #[arg(long)]
    pub components: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RunArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub config: PathBuf,
    /// Start plan; repeat to give each chain its own start.
    #[arg(long)]
    pub plan: Vec<PathBuf>,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of chains (defaults to the number of start plans, or 1).
    #[arg(long)]
    pub chains: Option<usize>,
    /// Elections to score; defaults to the config list, then to every election in the graph.
    #[arg(long)]
    pub election: Vec<String>,
}

#[derive(Args, Debug)]
pub struct AnalyzeArgs {
    /// Ensemble files written by `run`.
    #[arg(required = true)]
    pub ensembles: Vec<PathBuf>,
    #[arg(long)]
    pub graph: PathBuf,
    /// The enacted plan.
    #[arg(long)]
    pub plan: PathBuf,
    /// Elections to analyze; defaults to every election in the ensembles.
    #[arg(long)]
    pub election: Vec<String>,
    /// Records dropped from the start of every file.
    #[arg(long, default_value_t = 0)]
    pub burn_in: usize,
    /// Cap on the records sampled into violin and scatter tables.
    #[arg(long, default_value_t = 10_000)]
    pub plot_samples: usize,
    /// Bins in the density overlay tables.
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
}

#[derive(Args, Debug)]
pub struct SuperdistrictArgs {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub election: String,
    #[arg(long, default_value_t = 0.01)]
    pub pop_tolerance: f64,
}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;
const EXIT_RUNTIME: u8 = 3;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_USAGE) } else { ExitCode::SUCCESS };
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    std::fs::create_dir_all(&cli.out)
        .with_context(|| format!("creating output directory {}", cli.out.display()))?;
    match cli.command {
        Command::Ingest(a) => ingest::cmd_ingest(&a, &cli.out),
        Command::Run(a) => run::cmd_run(&a, &cli.out),
        Command::Analyze(a) => analyze::cmd_analyze(&a, &cli.out),
        Command::Superdistrict(a) => superdistrict::cmd_superdistrict(&a, &cli.out),
    }
}

fn exit_code(e: &anyhow::Error) -> u8 {
    for cause in e.chain() {
        if let Some(core) = cause.downcast_ref::<redist_core::Error>() {
            return if core.is_data_error() { EXIT_DATA } else { EXIT_RUNTIME };
        }
    }
    EXIT_RUNTIME
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}
