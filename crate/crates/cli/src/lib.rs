//! Command-line driver: argument parsing, command implementations and
//! manifest-carrying CSV/JSON output.

pub mod args;
pub mod commands;
pub mod output;

pub use args::{Cli, Command};
pub use commands::{run, CliError, Outcome};
pub use output::{data_section, Cell, Manifest, Report, Table};

/// Configures the global worker pool; `None` keeps the default size.
pub fn configure_threads(threads: Option<usize>) -> Result<(), CliError> {
    if let Some(n) = threads {
        if n == 0 {
            return Err(CliError::input("--threads must be positive"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::numerical(format!("cannot configure worker threads: {e}")))?;
    }
    Ok(())
}

/// Parses nothing; runs `cli` end to end and returns the process exit code.
pub fn execute(cli: &Cli) -> i32 {
    let common = cli.command.common();
    if let Err(e) = configure_threads(common.threads) {
        eprintln!("error: {e}");
        return e.code;
    }
    let outcome = match run(&cli.command) {
        Ok(o) => o,
        Err(e) => {
            eprintln!("error: {e}");
            return e.code;
        }
    };
    let text = if common.json { outcome.report.to_json() } else { outcome.report.to_csv() };
    let written = commands::emit(common.out.as_deref(), &text)
        .and_then(|_| outcome.extra.iter().try_for_each(|(p, c)| commands::emit(Some(p), c)));
    if let Err(e) = written {
        eprintln!("error: {e}");
        return e.code;
    }
    eprintln!("{}", outcome.summary);
    outcome.exit_code
}
