use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;
use mwcusum::cli_io::{exit_code, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    // Unlocked handles: worker threads may log to stderr while a command runs.
    let result = run(&cli, &mut io::stdout(), &mut io::stderr());
    let _ = io::stdout().flush();
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
