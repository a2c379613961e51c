//! `intconf` command-line front end.
//!
//! Exit status: 0 when every check passes, 1 on runtime errors or failed
//! checks, 2 on invalid arguments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod params;
mod table;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use params::Params;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
}

impl From<intconf::Error> for CliError {
    fn from(e: intconf::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "intconf", version, about = "Randomized integration with (epsilon, delta) confidence guarantees")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one estimate and print it as JSON.
    Estimate(Params),
    /// Empirical failure probability of an estimator at a fixed epsilon.
    FailureProb(Params),
    /// Error statistic across budgets with a log-log slope fit.
    RateSweep(Params),
    /// Exact scan of the binomial tail inequalities up to --k-max.
    VerifyLemmas(Params),
    /// Run a named verification suite.
    VerifyBounds(Params),
    /// Same as `verify-bounds --suite counterexample`.
    Counterexample(Params),
}

fn dispatch(command: Command) -> Result<bool, CliError> {
    let (params, run): (Params, fn(&Params) -> commands::Verdict) = match command {
        Command::Estimate(p) => (p, commands::estimate),
        Command::FailureProb(p) => (p, commands::failure_prob),
        Command::RateSweep(p) => (p, commands::rate_sweep),
        Command::VerifyLemmas(p) => (p, commands::verify_lemmas),
        Command::VerifyBounds(p) => (p, commands::verify_bounds),
        Command::Counterexample(p) => (p, commands::counterexample),
    };
    let params = params.resolve()?;
    match params.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(t) => intconf::harness::with_threads(t, || run(&params))?,
        None => run(&params),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
