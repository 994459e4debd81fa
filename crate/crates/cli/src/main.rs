//! `riemannlab` command-line front end.
//!
//! Exit codes: `0` on success, `1` on a numerical or I/O failure (with a
//! JSON error report on stderr), `2` on a usage error.

mod args;
mod commands;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use riemannlab_core::Error;
use serde_json::json;

use crate::args::{run_config, Cli};

/// Environment variable capping the worker count.
const THREADS_VAR: &str = "RIEMANNLAB_THREADS";

/// Prints `message` with the usage of `group verb` and returns exit code 2.
fn usage_error(message: &str, path: &[&str]) -> ExitCode {
    let mut target = Cli::command();
    target.build();
    for name in path {
        match target.find_subcommand(name) {
            Some(sub) => target = sub.clone(),
            None => break,
        }
    }
    eprintln!("error: {message}\n\n{}", target.render_usage());
    ExitCode::from(2)
}

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_VAR} must be a positive integer, got `{raw}`"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| format!("cannot configure {threads} worker threads: {e}"))
}

fn main() -> ExitCode {
    let command = Cli::command();
    let matches = match command.clone().try_get_matches() {
        Ok(m) => m,
        Err(e) => {
            // clap exits with 0 for help and version, 2 for usage errors.
            e.exit();
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(c) => c,
        Err(e) => e.exit(),
    };
    let output = cli.group.output();
    let config = run_config(&command, &matches, output);
    let path = [config.group.as_str(), config.verb.as_str()];
    if let Err(message) = configure_threads() {
        return usage_error(&message, &path);
    }
    if output.dry_run {
        println!("{}", json!(config));
        return ExitCode::SUCCESS;
    }
    if let Err(e) = std::fs::create_dir_all(&config.output_dir) {
        let err = Error::Io {
            path: config.output_dir.clone(),
            source: e,
        };
        return report(&err);
    }
    match commands::execute(&cli.group, &config) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(Error::InvalidArgument { name, reason }) => {
            usage_error(&format!("invalid value for `{name}`: {reason}"), &path)
        }
        Err(e) => report(&e),
    }
}

/// Prints a JSON error report and returns exit code 1.
fn report(err: &Error) -> ExitCode {
    let kind = match err {
        Error::InvalidArgument { .. } => "invalid_argument",
        Error::StepUnderflow { .. } => "step_underflow",
        Error::StepBudget { .. } => "step_budget",
        Error::NonFinite { .. } => "non_finite",
        Error::Quadrature { .. } => "quadrature",
        Error::FitResidual { .. } => "fit_residual",
        Error::Overflow { .. } => "overflow",
        Error::Stability { .. } => "stability",
        Error::Io { .. } => "io",
        Error::Serialize { .. } => "serialize",
    };
    eprintln!("{}", json!({ "status": "error", "kind": kind, "message": err.to_string() }));
    ExitCode::from(1)
}
