#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod args;
mod commands;
mod error;
mod output;
mod samples;
mod selftest;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, Format};
use commands::Context;
use delaunay4::exec::{configure_threads, Execution};
use error::{CliError, CliResult};

const THREADS_ENV: &str = "DELAUNAY4_THREADS";

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return ExitCode::from(code as u8);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code as u8)
        }
    }
}

fn threads(cli: &Cli) -> CliResult<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.trim().parse().map_err(|_| {
            CliError::usage(format!(
                "{THREADS_ENV} must be a non-negative integer (got '{v}')"
            ))
        }),
        Err(_) => Ok(cli.threads),
    }
}

fn run(cli: &Cli) -> CliResult<()> {
    let threads = threads(cli)?;
    configure_threads(threads).map_err(CliError::usage)?;
    let ctx = Context {
        exec: if threads == 1 {
            Execution::Sequential
        } else {
            Execution::Parallel
        },
        output: cli.output.clone(),
    };
    let (table, failed) = match &cli.command {
        Command::Constants(a) => (commands::constants(a)?, None),
        Command::Orbits(a) => (commands::orbits(a, &ctx)?, None),
        Command::Spectrum(a) => (commands::spectrum(a, &ctx)?, None),
        Command::Indicial(a) => (commands::indicial(a)?, None),
        Command::Bands(a) => (commands::bands(a, &ctx)?, None),
        Command::Pohozaev(a) => (commands::pohozaev(a, &ctx)?, None),
        Command::Profile(a) => match commands::profile(a, &ctx)? {
            Some(t) => (t, None),
            None => return Ok(()),
        },
        Command::Fit(a) => (commands::fit(a, &ctx)?, None),
        Command::Selftest(a) => {
            let (t, ok) = selftest::run(a.seed)?;
            (
                t,
                (!ok).then(|| CliError::numerical("selftest: some checks failed")),
            )
        }
    };
    let bytes = match cli.format {
        Format::Csv => table.to_csv()?,
        Format::Json => {
            let meta = serde_json::to_value(cli).map_err(|e| CliError::io(e.to_string()))?;
            table.to_json(meta)?
        }
    };
    output::emit(cli.output.as_deref(), &bytes)?;
    failed.map_or(Ok(()), Err)
}
