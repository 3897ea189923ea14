use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(
    name = "aimq",
    about = "Simulate an isolated multilevel quantizer and its power budget",
    disable_version_flag = true
)]
pub struct Cli {
    /// Config file (TOML); keys not given fall back to the built-in defaults.
    #[arg(short, long, global = true)]
    pub config: Option<PathBuf>,

    /// Directory for output files.
    #[arg(long, global = true, env = "AIMQ_OUT_DIR", default_value = "aimq-out")]
    pub out_dir: PathBuf,

    /// Print the effective configuration as TOML and exit.
    #[arg(long, global = true)]
    pub dump_config: bool,

    /// Print version and defaults-file hash.
    #[arg(short = 'V', long)]
    pub version: bool,

    #[command(subcommand)]
    pub command: Option<Command>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run the random-walk experiment (or a bus trace file) through the quantizer.
    Simulate(SimulateArgs),
    /// Sweep the input and tabulate the quantizer staircase.
    Staircase(StaircaseArgs),
    /// Compare quantizer and isolation-amplifier power budgets.
    PowerCompare(PowerArgs),
    /// Show the one-hot form of a level, or the whole conversion table.
    Encode(EncodeArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of bus samples.
    #[arg(long)]
    pub steps: Option<usize>,
    /// Starting bus voltage.
    #[arg(long)]
    pub v0: Option<f64>,
    /// Bus sample interval in seconds.
    #[arg(long)]
    pub t_s: Option<f64>,
    /// Read the bus from a trace file instead of generating a random walk.
    #[arg(long, conflicts_with_all = ["seed", "seeds", "v0", "steps", "t_s"])]
    pub input: Option<PathBuf>,
    /// Trace CSV path (default: <out-dir>/trace.csv).
    #[arg(short, long, conflicts_with = "seeds")]
    pub output: Option<PathBuf>,
    /// Run an inclusive seed range `a..b` in parallel, one set of files per seed.
    #[arg(long, value_parser = parse_seed_range)]
    pub seeds: Option<(u64, u64)>,
}

#[derive(Debug, Args)]
pub struct StaircaseArgs {
    /// Sweep step in volts.
    #[arg(long, default_value_t = 0.1)]
    pub step: f64,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    #[arg(long)]
    pub v_pri: Option<f64>,
    #[arg(long)]
    pub i_b: Option<f64>,
    #[arg(long)]
    pub v_iso: Option<f64>,
    #[arg(long)]
    pub i_pri: Option<f64>,
    #[arg(long)]
    pub eta: Option<f64>,
    #[arg(long)]
    pub i_zf: Option<f64>,
    #[arg(long)]
    pub v_sec: Option<f64>,
    #[arg(long)]
    pub i_sec: Option<f64>,
    #[arg(long)]
    pub i_out: Option<f64>,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    #[arg(long, requires = "width", conflicts_with = "table")]
    pub level: Option<usize>,
    #[arg(long)]
    pub width: Option<usize>,
    /// Print every level for this many channels.
    #[arg(long, value_name = "N")]
    pub table: Option<usize>,
}

fn parse_seed_range(s: &str) -> Result<(u64, u64), String> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| format!("expected a range like 1..5, got `{s}`"))?;
    let a: u64 = a
        .trim()
        .parse()
        .map_err(|e| format!("bad start seed: {e}"))?;
    let b: u64 = b.trim().parse().map_err(|e| format!("bad end seed: {e}"))?;
    if a > b {
        return Err(format!("empty seed range {a}..{b}"));
    }
    Ok((a, b))
}
