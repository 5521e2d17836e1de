// SPDX-License-Identifier: Apache-2.0

//! `htgen`: feature extraction, baseline and learned Trojan insertion,
//! training and evaluation from the command line.

mod commands;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "htgen", version, about = "Learned hardware Trojan insertion for gate-level netlists")]
pub struct Cli {
    /// Write the log (with a seed header) to this file instead of stderr.
    #[arg(long, global = true, value_name = "FILE")]
    pub log: Option<PathBuf>,
    /// More log output (repeatable); the default level is info.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
    /// Only log warnings and errors.
    #[arg(short, long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Extract the 14 net features of a netlist as CSV or JSON.
    Features(FeaturesArgs),
    /// Insert Trojans on rare nets (signal probability threshold, no ML).
    Baseline(BaselineArgs),
    /// Cluster a baseline suite and train one model bundle per cluster.
    Train(TrainArgs),
    /// Insert Trojans with a trained model bundle.
    Insert(InsertArgs),
    /// Top-N cluster-hit accuracy of the four ablation arms.
    Eval(EvalArgs),
    /// Justify a trigger condition and optionally verify an inserted Trojan.
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
pub struct HostArgs {
    /// Structural Verilog netlist.
    #[arg(long, value_name = "FILE")]
    pub netlist: PathBuf,
    /// Clock net (default: the net driving the most flip-flop clock pins).
    #[arg(long, value_name = "NET")]
    pub clock: Option<String>,
    /// Active-low reset net for Trojan flip-flops.
    #[arg(long, value_name = "NET")]
    pub reset: Option<String>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum Mask {
    All,
    Functional,
}

#[derive(Args, Debug)]
pub struct FeaturesArgs {
    #[command(flatten)]
    pub host: HostArgs,
    /// Random vectors for signal probability and toggle rate.
    #[arg(long, default_value_t = 100_000)]
    pub vectors: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file (default: stdout).
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
    /// Also write the netlist graph as a text edge list.
    #[arg(long, value_name = "FILE")]
    pub dump_edges: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BaselineArgs {
    #[command(flatten)]
    pub host: HostArgs,
    /// Built-in template id (c1, c2, s1, s2) or a template Verilog file with a .json sidecar.
    #[arg(long)]
    pub template: String,
    /// JSON file with baseline settings; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Rare-side signal probability threshold, in (0, 0.5].
    #[arg(long)]
    pub theta: Option<f64>,
    /// Trojans to generate.
    #[arg(long)]
    pub count: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub vectors: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// The host the baseline suite was generated on.
    #[command(flatten)]
    pub host: HostArgs,
    /// Directory written by `baseline`.
    #[arg(long, value_name = "DIR")]
    pub suite: PathBuf,
    /// JSON file with training settings; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Net features fed to the classifiers.
    #[arg(long, value_enum)]
    pub mask: Option<Mask>,
    #[arg(long)]
    pub trees: Option<usize>,
    /// Keep at most this many negatives per classifier (seeded subsample).
    #[arg(long)]
    pub max_negatives: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub vectors: Option<usize>,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct InsertArgs {
    #[command(flatten)]
    pub host: HostArgs,
    /// Built-in template id (c1, c2, s1, s2) or a template Verilog file with a .json sidecar.
    #[arg(long)]
    pub template: String,
    /// Model bundle written by `train`.
    #[arg(long, value_name = "FILE")]
    pub models: PathBuf,
    /// JSON file with insertion settings; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Trojans to emit, one per output netlist.
    #[arg(long)]
    pub num: Option<usize>,
    /// Virtual Trojans evaluated per requested Trojan.
    #[arg(long)]
    pub pool_factor: Option<usize>,
    /// Five comma-separated distance weights (probability, activity, cc1, cc0, co).
    #[arg(long, value_parser = parse_weights)]
    pub weights: Option<[f64; 5]>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub vectors: Option<usize>,
    /// Write the CNF of each emitted trigger condition (DIMACS) next to the netlist.
    #[arg(long)]
    pub dump_cnf: bool,
    #[arg(long, value_name = "DIR")]
    pub out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[command(flatten)]
    pub host: HostArgs,
    /// Built-in template id or template file.
    #[arg(long)]
    pub template: String,
    /// `training.json` written by `train`.
    #[arg(long, value_name = "FILE")]
    pub training: PathBuf,
    /// JSON file with experiment settings; flags override it.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub runs: Option<usize>,
    /// Comma-separated N values.
    #[arg(long, value_delimiter = ',')]
    pub top_n: Option<Vec<usize>>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub vectors: Option<usize>,
    /// Accuracy table (CSV).
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    /// Per-run records (JSON).
    #[arg(long, value_name = "FILE")]
    pub records: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    /// Netlist to justify on (an emitted Trojan netlist or a host).
    #[arg(long, value_name = "FILE")]
    pub netlist: PathBuf,
    /// Insertion report giving the trigger condition (default: the netlist's .json sibling).
    #[arg(long, value_name = "FILE")]
    pub report: Option<PathBuf>,
    /// Trigger condition as `net=0|1,...`, instead of a report.
    #[arg(long, conflicts_with = "report")]
    pub condition: Option<String>,
    /// Original host: also run the dormant/activation/interface checks.
    #[arg(long, value_name = "FILE")]
    pub original: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub vectors: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 10_000)]
    pub timeout_ms: u64,
    /// Write the CNF of the condition (DIMACS).
    #[arg(long, value_name = "FILE")]
    pub dimacs: Option<PathBuf>,
}

fn parse_weights(s: &str) -> Result<[f64; 5], String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>().map_err(|e| format!("{x}: {e}")))
        .collect::<Result<_, _>>()?;
    v.try_into().map_err(|v: Vec<f64>| format!("need 5 weights, got {}", v.len()))
}

/// Sets up logging once the run's seed is known.
pub fn init_logging(cli: &Cli, command: &str, seed: u64, config: &str) -> anyhow::Result<()> {
    let level = match (cli.quiet, cli.verbose) {
        (true, _) => log::LevelFilter::Warn,
        (false, 0) => log::LevelFilter::Info,
        (false, 1) => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    let mut b = env_logger::Builder::new();
    b.filter_level(level).format_timestamp(None).format_target(false);
    if let Some(path) = &cli.log {
        let mut f = std::fs::File::create(path)?;
        writeln!(f, "# htgen {} {}", command, env!("CARGO_PKG_VERSION"))?;
        writeln!(f, "# seed {seed}")?;
        b.target(env_logger::Target::Pipe(Box::new(f)));
    }
    let _ = b.try_init();
    log::info!("{command}: seed {seed}");
    log::info!("config {config}");
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            log::error!("{e:#}");
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
