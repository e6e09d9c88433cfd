mod commands;
mod config;

use std::process::ExitCode;

use clap::Parser;

use config::{Cli, RunConfig};

/// Failure classes and their exit codes.
#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config or input files: exit 2.
    Usage(String),
    /// Solver breakdown or failed checks: exit 1.
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 2,
            Self::Numerical(_) => 1,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Usage(m) => write!(f, "error: {m}"),
            Self::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

fn main() -> ExitCode {
    // clap exits with 2 on usage errors and 0 for --help/--version.
    let cli = Cli::parse();
    let flags = cli.command.flags();
    if flags.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(flags.threads).build_global() {
            eprintln!("error: cannot configure {} threads: {e}", flags.threads);
            return ExitCode::from(2);
        }
    }
    let result = RunConfig::resolve(flags).and_then(|cfg| commands::run(&cli.command, &cfg));
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
