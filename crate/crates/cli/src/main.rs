//! `disclift` command-line tool.

mod args;
mod basis;
mod eval;
mod failure;
mod fit;
mod generate;
mod inputs;
mod manifest;
mod text;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use failure::Failure;

fn run(cli: Cli) -> Result<(), Failure> {
    if let Some(threads) = cli.threads {
        if threads == 0 {
            return Err(Failure::usage("--threads must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Failure::usage(format!("cannot build thread pool: {e}")))?;
    }
    match cli.command {
        Command::Generate(a) => generate::run(&a),
        Command::Fit(a) => fit::run(&a),
        Command::Apply(a) => fit::apply(&a),
        Command::Eval(a) => eval::run(&a),
        Command::Basis(a) => basis::run(&a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.exit_code())
        }
    }
}
