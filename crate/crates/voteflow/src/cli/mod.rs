//! Command-line front end: argument parsing, experiment dispatch, and
//! report emission.
//!
//! All randomness in every command flows from a single `u64` seed (from
//! `--seed` or the config file) through ChaCha20 streams, so runs are
//! reproducible byte-for-byte. Exit codes: 0 on success, 2 for
//! configuration problems (bad flags, unparseable or invalid config
//! files), 3 for runtime failures.

pub mod commands;
pub mod config;
pub mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::error::{Error, Result};
pub use config::{parse_config, parse_config_str, preset, ExperimentSpec, PRESETS};
pub use report::ReportBundle;

#[derive(Debug, Parser)]
#[command(
    name = "voteflow",
    version,
    about = "Cycle-level model and policy benchmarks for voting-based KV-cache eviction and flexible-product GEMV dataflow"
)]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate prefill and generation of the configured workload.
    Simulate(RunArgs),
    /// Sweep generation length; compare fixed-tree, flexible, and
    /// flexible + element-serial attention latency.
    AblateDataflow(RunArgs),
    /// Sweep generation length and compression ratio; report eviction
    /// attention-latency speedups.
    AblateEviction(RunArgs),
    /// Replay toy traces and bias scenarios through the eviction policies
    /// and report retained attention mass.
    EvictBench(RunArgs),
    /// Parse and validate a configuration, echoing its canonical form.
    ValidateConfig(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Experiment configuration file (TOML).
    #[arg(long, value_name = "PATH", conflicts_with = "preset")]
    config: Option<PathBuf>,

    /// Built-in configuration: llama2-7b, table2-throughput, fig7-center,
    /// fig7-right, or toy.
    #[arg(long, value_name = "NAME")]
    preset: Option<String>,

    /// Output directory for CSV tables, summary.json, and digest.txt.
    #[arg(long, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Override the config file's seed.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,

    /// Worker threads for sweep points (0 = one per core).
    #[arg(long, value_name = "INT", default_value_t = 1)]
    jobs: usize,
}

impl RunArgs {
    fn spec(&self) -> Result<ExperimentSpec> {
        match (&self.config, &self.preset) {
            (Some(path), None) => parse_config(path, self.seed),
            (None, Some(name)) => preset(name, self.seed),
            (None, None) => Err(Error::invalid_config(
                "pass exactly one of --config <path> or --preset <name>",
            )),
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        }
    }
}

type CommandFn = fn(&ExperimentSpec) -> Result<ReportBundle>;

fn run_command(cmd: &Command) -> Result<()> {
    let (args, runner, writes_files): (&RunArgs, CommandFn, bool) = match cmd {
        Command::Simulate(a) => (a, commands::simulate, true),
        Command::AblateDataflow(a) => (a, commands::ablate_dataflow, true),
        Command::AblateEviction(a) => (a, commands::ablate_eviction, true),
        Command::EvictBench(a) => (a, commands::evict_bench, true),
        Command::ValidateConfig(a) => (a, commands::validate_config, false),
    };

    let spec = args.spec()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(args.jobs)
        .build()
        .map_err(|e| Error::invalid_config(format!("cannot build thread pool: {e}")))?;
    let bundle = pool.install(|| runner(&spec))?;

    if writes_files {
        let written = bundle.emit(&args.out)?;
        print!("{}", bundle.digest);
        for path in written {
            println!("wrote {}", path.display());
        }
    } else {
        print!("{}", bundle.digest);
        println!("# config ok, hash {}", bundle.config_hash);
    }
    Ok(())
}

/// Entry point for the `voteflow` binary.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run_command(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            match err {
                Error::InvalidConfig(_) | Error::InvalidArgument(_) | Error::Format(_) => {
                    ExitCode::from(2)
                }
                _ => ExitCode::from(3),
            }
        }
    }
}
