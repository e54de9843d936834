use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpp_core::harness::{self, ExperimentConfig, HarnessError, Suite, VerifyOptions};

#[derive(Parser)]
#[command(name = "fpp-lab", version, about = "First-passage percolation experiments on Z^d")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for replicas.
    #[arg(long, env = "FPP_LAB_THREADS")]
    threads: Option<usize>,
    /// Override the master seed of the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for records and summaries.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Run whatever experiment the config names.
    Run(RunArgs),
    TimeConstant(RunArgs),
    Shape(RunArgs),
    Sigma(RunArgs),
    Transverse(RunArgs),
    CrossingDensity(RunArgs),
    Coalesce(RunArgs),
    Midpoint(RunArgs),
    HgGap(RunArgs),
    /// Run a property suite and print one line per check.
    Verify {
        #[arg(long)]
        suite: Suite,
        /// Number of seeds (boxes for the metric suite).
        #[arg(long)]
        seeds: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, env = "FPP_LAB_THREADS")]
        threads: Option<usize>,
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
}

fn run(expected: Option<&str>, a: RunArgs) -> Result<(), HarnessError> {
    let mut cfg = ExperimentConfig::load(&a.config)?;
    if let Some(kind) = expected {
        if cfg.experiment.name() != kind {
            return Err(HarnessError::Validation(format!(
                "config describes a {} experiment, not {kind}",
                cfg.experiment.name()
            )));
        }
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    let dir = a.out.or_else(|| cfg.out.clone()).unwrap_or_else(|| PathBuf::from("results"));
    let o = harness::run_config(&cfg, a.threads, &dir)?;
    println!("{} {} records -> {}", o.run_id, o.records, o.jsonl.display());
    println!("summary -> {}", o.csv.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (kind, args) = match cli.command {
        Command::Verify { suite, seeds, seed, threads, inject_fault } => {
            let r = harness::verify(suite, &VerifyOptions { seeds, master_seed: seed, threads, inject_fault });
            for line in r.lines() {
                println!("{line}");
            }
            return if r.all_pass() { ExitCode::SUCCESS } else { ExitCode::from(1) };
        }
        Command::Run(a) => (None, a),
        Command::TimeConstant(a) => (Some("time-constant"), a),
        Command::Shape(a) => (Some("shape"), a),
        Command::Sigma(a) => (Some("sigma"), a),
        Command::Transverse(a) => (Some("transverse"), a),
        Command::CrossingDensity(a) => (Some("crossing-density"), a),
        Command::Coalesce(a) => (Some("coalesce"), a),
        Command::Midpoint(a) => (Some("midpoint"), a),
        Command::HgGap(a) => (Some("hg-gap"), a),
    };
    match run(kind, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fpp-lab: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

