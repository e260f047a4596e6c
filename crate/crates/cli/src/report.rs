use std::io::Write;

use serde_json::{json, Value};

use crate::{ClassifyCommand, Cli, Command};

pub const EXIT_OK: u8 = 0;
pub const EXIT_SELFTEST: u8 = 1;
pub const EXIT_VIOLATION: u8 = 2;
pub const EXIT_HYPOTHESIS: u8 = 3;
pub const EXIT_INPUT: u8 = 4;

/// What a command produced, before it is wrapped with the run metadata.
pub struct Outcome {
    pub code: u8,
    pub status: &'static str,
    pub result: Value,
    pub error: Option<String>,
}

impl Outcome {
    pub fn new(code: u8, status: &'static str, result: Value) -> Self {
        Outcome {
            code,
            status,
            result,
            error: None,
        }
    }

    pub fn ok(result: Value) -> Self {
        Self::new(EXIT_OK, "ok", result)
    }

    pub fn from_error(e: sepkit::Error) -> Self {
        use sepkit::Error as E;
        let (code, status) = match e {
            E::InvertibilityUnknown { .. } => (EXIT_HYPOTHESIS, "invertibility_unknown"),
            E::NotCompletelyPositive { .. } => (EXIT_HYPOTHESIS, "not_completely_positive"),
            E::Inconclusive(_) | E::AmbiguousSubsystem(_) => (EXIT_HYPOTHESIS, "inconclusive"),
            _ => (EXIT_INPUT, "input_error"),
        };
        Outcome {
            code,
            status,
            result: Value::Null,
            error: Some(e.to_string()),
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Schmidt(_) => "schmidt",
        Command::Norm(_) => "norm",
        Command::Classify(ClassifyCommand::LocalForm(_)) => "classify local-form",
        Command::Classify(ClassifyCommand::Preserver(_)) => "classify preserver",
        Command::Classify(ClassifyCommand::Cp(_)) => "classify cp",
        Command::Classify(ClassifyCommand::Isometry(_)) => "classify isometry",
        Command::Gme(_) => "gme",
        Command::Recover(_) => "recover",
        Command::GmeInvariance(_) => "gme-invariance",
        Command::Search(_) => "search",
        Command::Selftest(_) => "selftest",
    }
}

/// Wraps the outcome with tool version, seed and tolerances, and writes one
/// JSON document to `--out` or stdout. Errors also go to stderr.
pub fn emit(cli: &Cli, outcome: Outcome) -> std::io::Result<()> {
    let c = &cli.common;
    let doc = json!({
        "tool": "sepkit",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command_name(&cli.command),
        "seed": c.seed,
        "tolerances": {
            "tol": c.tol,
            "realign_tol": c.realign_tol,
            "cond_bound": c.cond_bound,
            "samples": c.samples,
        },
        "status": outcome.status,
        "exit_code": outcome.code,
        "error": outcome.error,
        "result": outcome.result,
    });
    if let Some(msg) = &outcome.error {
        eprintln!("error: {msg}");
    }
    let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
    text.push('\n');
    match &c.out {
        Some(path) => std::fs::write(path, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    }
}
