//! Command-line front end: `verify`, `orbit`, `ifs` and `sweep`.
//!
//! Exit codes: 0 pass, 1 a check failed, 2 bad configuration, 3 I/O error.

pub mod args;
pub mod commands;
pub mod config;

use thiserror::Error;

use crate::args::{Cli, Command};
use crate::commands::{
    cmd_ifs, cmd_orbit, cmd_sweep, cmd_verify, json_bytes, summary, write_output,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Pass,
    Fail,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0:#}")]
    Config(anyhow::Error),
    #[error("i/o error: {0:#}")]
    Io(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

pub fn run(cli: &Cli) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Verify(args) => {
            let cfg = config::verify_config(args)?;
            let (report, outcome) = cmd_verify(&cfg)?;
            let out = args.common.out.as_deref();
            write_output(out, &json_bytes(&report))?;
            summary(
                out,
                &format!(
                    "verify: {}",
                    if outcome == Outcome::Pass {
                        "PASS"
                    } else {
                        "FAIL"
                    }
                ),
            );
            Ok(outcome)
        }
        Command::Orbit(args) => {
            let cfg = config::orbit_config(args)?;
            let (bytes, line) = cmd_orbit(&cfg)?;
            let out = args.common.out.as_deref();
            write_output(out, &bytes)?;
            summary(out, &line);
            Ok(Outcome::Pass)
        }
        Command::Ifs(args) => {
            let cfg = config::ifs_config(args)?;
            let res = cmd_ifs(&cfg)?;
            let out = args.common.out.as_deref();
            write_output(out, &res.main)?;
            if let Some(p) = &args.per_sequence {
                write_output(Some(p), &res.per_sequence)?;
            }
            summary(out, &res.summary);
            Ok(res.outcome)
        }
        Command::Sweep(args) => {
            let cfg = config::sweep_config(args)?;
            let (bytes, line) = cmd_sweep(&cfg)?;
            let out = args.common.out.as_deref();
            write_output(out, &bytes)?;
            summary(out, &line);
            Ok(Outcome::Pass)
        }
    }
}

/// Runs the command and maps the result to a process exit code.
pub fn exit_code(cli: &Cli) -> i32 {
    match run(cli) {
        Ok(Outcome::Pass) => 0,
        Ok(Outcome::Fail) => 1,
        Err(e) => {
            eprintln!("parrondo: {e}");
            e.exit_code()
        }
    }
}
