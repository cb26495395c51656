//! `schedlab`: train job-runtime models and replay workloads through a
//! cluster scheduling simulator.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use schedlab::cli::{
    cmd_compare, cmd_evaluate, cmd_generate, cmd_simulate, cmd_train, CommandOutput,
    ExperimentConfig,
};

#[derive(Parser)]
#[command(
    name = "schedlab",
    version,
    about = "Runtime prediction and scheduling simulation for batch workloads",
    after_help = "Experiments are described by flat `key = value` config files; \
                  any key can be overridden with --set key=value."
)]
struct Cli {
    /// Experiment config file (flat `key = value` lines)
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Master seed; overrides the config's `seed`
    #[arg(long, global = true, value_name = "INT")]
    seed: Option<u64>,

    /// Output directory for artifacts
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    out: PathBuf,

    /// Override one config key (repeatable)
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic workload trace
    Generate,
    /// Train a runtime model and report held-out prediction quality
    Train,
    /// Score a persisted model against a whole trace
    Evaluate,
    /// Replay a trace under one scheduling policy
    Simulate,
    /// Replay a trace under several policies and tabulate improvements
    Compare,
}

fn run(cli: Cli) -> schedlab::Result<CommandOutput> {
    let config = ExperimentConfig::load(cli.config.as_deref(), &cli.set, cli.seed)?;
    match cli.command {
        Command::Generate => cmd_generate(&config, &cli.out),
        Command::Train => cmd_train(&config, &cli.out),
        Command::Evaluate => cmd_evaluate(&config, &cli.out),
        Command::Simulate => cmd_simulate(&config, &cli.out),
        Command::Compare => cmd_compare(&config, &cli.out),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap sends help/version to stdout and argument errors to
            // stderr; the latter are bad input, exit code 1.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(output) => {
            print!("{}", output.stdout);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
