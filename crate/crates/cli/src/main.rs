use std::process::ExitCode;

use clap::Parser;
use loopsource_cli::{emit, run, Cli};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli).and_then(|table| emit(&table, cli.command.output())) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("loopsource: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
