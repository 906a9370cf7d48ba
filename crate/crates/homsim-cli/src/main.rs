mod cli;
mod commands;
mod config;
mod units;

use clap::Parser;
use homsim::Error;

/// Exit codes: 0 success, 2 validation, 3 I/O, 4 malformed data.
fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Degenerate(_) | Error::Precondition(_) | Error::Config(_) => 2,
        Error::Io(_) => 3,
        Error::Malformed(_) => 4,
    }
}

fn base_seed() -> u64 {
    std::env::var("HOMSIM_SEED")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or(0)
}

fn main() {
    let args = cli::Cli::parse();
    let result = match &args.command {
        cli::Command::Model(a) => commands::cmd_model(a),
        cli::Command::Simulate(a) => commands::cmd_simulate(a, base_seed()),
        cli::Command::Correlate(a) => commands::cmd_correlate(a),
        cli::Command::Fit(a) => commands::cmd_fit(a),
    };
    if let Err(e) = result {
        eprintln!("error: {e}");
        std::process::exit(exit_code(&e));
    }
}
