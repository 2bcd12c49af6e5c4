// Negated comparisons such as `!(t > 0.0)` are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod io;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Format};
use error::CliError;

/// Cap rayon's pool from `SL_KREIN_THREADS`.
fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SL_KREIN_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Input(format!("SL_KREIN_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Numeric(format!("cannot configure threads: {e}")))
}

fn run(cli: &Cli) -> Result<Option<String>, CliError> {
    configure_threads()?;
    let outcome = commands::run(cli)?;
    let text = match cli.format {
        Format::Json => io::to_json(&outcome.json)?,
        Format::Csv => outcome
            .table
            .as_ref()
            .ok_or_else(|| CliError::Input("this command has no CSV form; use --format json".into()))?
            .to_csv()?,
    };
    io::emit(&text, cli.output.as_deref())?;
    Ok(outcome.violation)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(violation)) => {
            let e = CliError::Property(violation);
            eprintln!("sl-krein: {e}");
            ExitCode::from(e.exit_code())
        }
        Err(e) => {
            eprintln!("sl-krein: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
