mod args;
mod commands;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;
use serde_json::{json, Value};
use stplab::StpError;

use args::Cli;

pub enum CliError {
    Usage(String),
    /// Failed checks, with the summary of what was computed.
    Assertion(Vec<String>, Value),
    Core(StpError),
}

impl From<StpError> for CliError {
    fn from(e: StpError) -> Self {
        CliError::Core(e)
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Core(e.into())
    }
}

fn emit_error(kind: &str, message: &str, extra: Value) {
    let mut v = json!({ "error": kind, "message": message });
    if let (Value::Object(m), Value::Object(x)) = (&mut v, extra) {
        m.extend(x);
    }
    eprintln!("{v}");
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
            let _ = e.print();
            return ExitCode::from(2);
        }
        Err(e) => {
            emit_error("usage", e.to_string().trim(), json!({}));
            return ExitCode::from(2);
        }
    };
    let result = output::Output::new(&cli).and_then(|out| {
        output::write_manifest(&cli, &out.dir)?;
        Ok(out)
    });
    let out = match result {
        Ok(o) => o,
        Err(e) => {
            emit_error("io", &e.to_string(), json!({}));
            return ExitCode::from(1);
        }
    };
    match commands::run(&cli.command, &out) {
        Ok(summary) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Err(CliError::Usage(m)) => {
            emit_error("usage", &m, json!({}));
            ExitCode::from(2)
        }
        Err(CliError::Assertion(failed, summary)) => {
            println!("{summary}");
            emit_error("assertion", &failed.join("; "), json!({ "failed": failed }));
            ExitCode::from(1)
        }
        Err(CliError::Core(e)) => {
            // bad inputs surface as these; everything else is a runtime failure
            let usage = matches!(
                e,
                StpError::Precondition(_) | StpError::Invalid(_) | StpError::Json(_) | StpError::Capacity { .. }
            );
            emit_error(if usage { "usage" } else { "runtime" }, &e.to_string(), json!({}));
            ExitCode::from(if usage { 2 } else { 1 })
        }
    }
}
