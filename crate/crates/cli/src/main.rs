use std::process::ExitCode;

use clap::Parser;
use goafem_cli::{parse_config, run, Cli, Outcome};

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = match parse_config(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    match run(&config, |line| eprintln!("{line}")) {
        Ok(Outcome::Completed(_)) => ExitCode::SUCCESS,
        Ok(Outcome::Stopped(run, reason)) => {
            eprintln!("stopped after {} levels: {reason}", run.history.len());
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(e.exit_code())
        }
    }
}
