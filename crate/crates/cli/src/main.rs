mod compare;
mod config;
mod evaluate;
mod generate;
mod gradcheck;
mod pipeline;
mod train;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(
    name = "runoff",
    version,
    about = "Hourly rainfall-runoff modeling: synthetic watershed data, five \
             CNN/LSTM architectures, deterministic training and evaluation",
    after_help = "Every value flag can also come from a --config file of \
                  `key = value` lines (keys named like the long flags). \
                  Precedence: flag > config file > built-in default. The \
                  default output root is $RUNOFF_OUT_DIR, else ./runs."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic snow-dominated watershed dataset as hourly CSV
    Generate(generate::Args),
    /// Train one architecture over repeated trials; write checkpoints, loss
    /// logs, metrics and predictions
    Train(train::Args),
    /// Score a saved checkpoint on a dataset
    Evaluate(evaluate::Args),
    /// Verify analytic gradients against finite differences
    Gradcheck(gradcheck::Args),
    /// Train several architectures on shared data and tabulate their median
    /// metrics side by side
    Compare(compare::Args),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Generate(args) => generate::run(args),
        Command::Train(args) => train::run(args),
        Command::Evaluate(args) => evaluate::run(args),
        Command::Gradcheck(args) => gradcheck::run(args),
        Command::Compare(args) => compare::run(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
