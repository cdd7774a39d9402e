//! `perpetua` command line.
//!
//! Every subcommand writes one JSON report (to `--out`, or stdout) that
//! embeds the fully resolved configuration. Reports contain no wall-clock
//! data; `--epoch` is copied verbatim when given.
//!
//! Exit codes: 0 success, 1 a gallery verification failed, 2 bad usage or
//! configuration.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use perpetua::Error;

pub const EXIT_OK: i32 = 0;
pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "perpetua", version, about = "Random-coefficient AR(1) processes and perpetuities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an ensemble and report per-step cross-replication statistics.
    Simulate(RunArgs),
    /// Simulate and decide C0 and conditions (i)-(vi).
    Diagnose(RunArgs),
    /// Estimate the top Lyapunov exponent and decide C0.
    Lyapunov(RunArgs),
    /// Exact analysis of a constant coefficient matrix.
    Constant(ConstantArgs),
    /// Fixtures with closed-form oracles.
    #[command(subcommand)]
    Gallery(GalleryCommand),
    /// Scan a law family for (vi) HOLDS with (v) FAILS.
    Search(SearchArgs),
}

#[derive(Debug, Subcommand)]
pub enum GalleryCommand {
    /// Describe every entry.
    List(OutputArgs),
    /// Check an entry's oracles and expected verdicts.
    Verify(VerifyArgs),
    /// Scan a law family (JSON file or inline document).
    Search(GallerySearchArgs),
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Write the JSON report here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Worker threads (default: PERPETUA_THREADS, else all cores).
    #[arg(long, env = "PERPETUA_THREADS")]
    pub threads: Option<usize>,
    /// Fixed timestamp recorded in the report.
    #[arg(long)]
    pub epoch: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct ThresholdArgs {
    /// Width of the Lyapunov sign test in standard errors.
    #[arg(long = "c0-sigma")]
    pub c0_sigma: Option<f64>,
    /// Replication fraction needed for HOLDS or FAILS.
    #[arg(long)]
    pub quorum: Option<f64>,
    /// Relative tail tolerance for (ii) and (iii).
    #[arg(long = "tail-tol")]
    pub tail_tol: Option<f64>,
    /// Grid for the (vi) tail probabilities: comma-separated or a JSON array.
    #[arg(long = "x-grid")]
    pub x_grid: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    /// Horizon T.
    #[arg(long = "T")]
    pub horizon: Option<usize>,
    /// Replications R.
    #[arg(long = "R")]
    pub replications: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Law document: a path, or inline JSON.
    #[arg(long)]
    pub law: String,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    /// CSV trajectory of replication 0.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct ConstantArgs {
    /// Matrix as JSON rows, e.g. '[[0.5,0],[0,0.25]]', or a path.
    #[arg(long)]
    pub matrix: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    /// E31, E32, E33, E34 or R34.
    pub id: String,
    /// Entry parameters as JSON, e.g. '{"alpha":0.25}'.
    #[arg(long)]
    pub params: Option<String>,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SearchOptions {
    /// Number of laws drawn from the family.
    #[arg(long, default_value_t = 20)]
    pub budget: usize,
    #[command(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    pub thresholds: ThresholdArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct GallerySearchArgs {
    /// Family document: a path, or inline JSON.
    pub family: String,
    #[command(flatten)]
    pub options: SearchOptions,
}

#[derive(Debug, Clone, Args)]
pub struct SearchArgs {
    /// Family document: a path, or inline JSON.
    #[arg(long)]
    pub family: String,
    #[command(flatten)]
    pub options: SearchOptions,
}


/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match commands::execute(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(_: &Error) -> i32 {
    EXIT_CONFIG
}
