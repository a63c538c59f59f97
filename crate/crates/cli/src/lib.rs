//! Command-line front end: dataset generation, cleaning, training,
//! cross-validation, prediction and importance ranking.

/// `println!` that ignores a closed stdout, as when piped into `head`.
macro_rules! say {
    ($($arg:tt)*) => {
        $crate::emit(&format!($($arg)*))
    };
}

pub mod args;
pub mod commands;
pub mod config;
pub mod csvio;
pub mod error;
pub mod model_file;

use args::Cli;
use config::RunConfig;
use error::{CliError, CliResult};

pub(crate) fn emit(line: &str) {
    use std::io::Write;
    let _ = writeln!(std::io::stdout().lock(), "{line}");
}

pub fn run(cli: Cli) -> CliResult<()> {
    let cfg = RunConfig::resolve(&cli.global, cli.command)?;
    match cfg.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?
            .install(|| commands::execute(&cfg)),
        None => commands::execute(&cfg),
    }
}
