//! `cssqkd`: exponent sweeps, rate curves, code banks, protocol simulation
//! and the verification suite.
//!
//! Exit status: 0 on success, 1 when a verification fails, 2 on usage or
//! input errors.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Failed(String),
}

impl From<cssqkd::Error> for CliError {
    fn from(e: cssqkd::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(name = "cssqkd", version, about = "CSS codes, error exponents and BB84 simulation")]
pub struct Cli {
    /// Flat `key = value` file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Sweep R over a grid and tabulate E*, the joint, GV and conditional exponents.
    Exponents(ExponentsArgs),
    /// Achievable key rates against a channel family, with zero crossings.
    Rates(RatesArgs),
    /// Search balanced codes and write a code bank.
    Codegen(CodegenArgs),
    /// Monte Carlo sessions of BB84 or modified BB84.
    Simulate(SimulateArgs),
    /// Run the brute-force verification suite.
    Verify(VerifyArgs),
    /// Empirical random-sampling tails against their bound.
    SampleBound(SampleBoundArgs),
}

#[derive(Args, Debug)]
pub struct ExponentsArgs {
    #[arg(long)]
    pub d: Option<u32>,
    /// Digit error law, comma separated.
    #[arg(long)]
    pub p: Option<String>,
    /// Second marginal for the joint exponent (defaults to --p).
    #[arg(long)]
    pub p2: Option<String>,
    /// Joint law for the GV and conditional exponents (attack grammar;
    /// defaults to the product of --p and --p2).
    #[arg(long)]
    pub channel: Option<String>,
    /// Second half's joint law for the conditional exponent (defaults to --channel).
    #[arg(long)]
    pub channel1: Option<String>,
    #[arg(long = "Rgrid")]
    pub r_grid: Option<String>,
    /// Comma separated subset of estar,joint,gv,cond.
    #[arg(long)]
    pub variants: Option<String>,
}

#[derive(Args, Debug)]
pub struct RatesArgs {
    #[arg(long)]
    pub d: Option<u32>,
    /// flips | depolarizing | dephasing
    #[arg(long)]
    pub channel: Option<String>,
    #[arg(long)]
    pub qgrid: Option<String>,
    #[arg(long)]
    pub pa: Option<f64>,
    #[arg(long)]
    pub pb: Option<f64>,
    #[arg(long)]
    pub pc: Option<f64>,
}

#[derive(Args, Debug)]
pub struct CodegenArgs {
    #[arg(long)]
    pub d: Option<u32>,
    /// Comma separated code lengths.
    #[arg(long)]
    pub lengths: Option<String>,
    #[arg(long)]
    pub tries: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// bb84 | modified
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub d: Option<u32>,
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub pa: Option<f64>,
    #[arg(long)]
    pub pb: Option<f64>,
    #[arg(long)]
    pub pc: Option<f64>,
    #[arg(long)]
    pub attack: Option<String>,
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long = "Etarget")]
    pub e_target: Option<f64>,
    #[arg(long)]
    pub gamma: Option<f64>,
    #[arg(long)]
    pub trials: Option<u64>,
    /// Master seed; required.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Code bank file (default: $CSSQKD_CODEBANK, else a bank generated from the seed).
    #[arg(long)]
    pub codebank: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    /// Smaller trial counts.
    #[arg(long)]
    pub quick: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Write the JSON report here; the text table goes to stdout.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct SampleBoundArgs {
    /// String length N.
    #[arg(long = "N")]
    pub big_n: Option<usize>,
    /// Sample size n.
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub alphabet: Option<usize>,
    /// halves | zeros | random | a digit string
    #[arg(long)]
    pub source: Option<String>,
    #[arg(long)]
    pub eps: Option<String>,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Failed(msg)) => {
            eprintln!("verification failed: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
