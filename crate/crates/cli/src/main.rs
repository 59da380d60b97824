use std::process::ExitCode;

use clap::Parser;

use scmn_cli::args::Cli;
use scmn_cli::{configure_threads, run, CliError};

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, CliError> {
    configure_threads()?;
    let (manifest, save) = cli.command.manifest()?;
    if let Some(path) = save {
        let mut text = manifest.resolve()?.to_json();
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| CliError::Io { path, source: e })?;
    }
    let outcome = run(&manifest)?;
    if let Some(report) = &outcome.report {
        println!("{report}");
    }
    println!("{}", outcome.summary);
    if let Some(e) = outcome.failure() {
        eprintln!("error: {e}");
    }
    Ok(outcome.exit_code())
}
