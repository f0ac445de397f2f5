//! Command-line front end: runs the canned experiments and writes JSON or
//! CSV results with the configuration and library version attached.

pub mod commands;
pub mod schema;

use std::fs;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use nonlocality_core::LabError;
use serde::Serialize;
use serde_json::Value;

pub const THREADS_ENV: &str = "NONLOCALITY_LAB_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad input or configuration; exit code 2.
    #[error("validation error: {0}")]
    Validation(String),
    /// Anything else; exit code 1.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Internal(_) => 1,
        }
    }
}

impl From<LabError> for CliError {
    fn from(e: LabError) -> Self {
        CliError::Validation(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Generic,
    Admissible,
    Both,
}

#[derive(Debug, Clone, Parser, Serialize)]
#[command(name = "nonlocality-lab", version, about = "Inequality-free nonlocality experiments on small spin systems")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Tolerance for correlation checks.
    #[arg(long, global = true, default_value_t = 1e-10)]
    pub tol: f64,
    /// JSON input file (see README for shapes).
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub input: Option<PathBuf>,
    /// Output file; stdout if absent.
    #[arg(long, global = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
    #[command(subcommand)]
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Build Hardy's four observables from a state and n₁.
    Hardy {
        #[arg(long, default_value_t = 0.8)]
        lambda: f64,
        #[arg(long, default_value_t = 1.1)]
        theta: f64,
        #[arg(long, default_value_t = 0.7)]
        phi: f64,
    },
    /// Maximize the Hardy violation probability.
    HardyOptimize {
        #[arg(long, default_value_t = 32)]
        starts: usize,
    },
    /// Leak probability of the Hardy correlations under a tilt of n₄.
    Sensitivity {
        #[arg(long, default_value_t = 0.8)]
        lambda: f64,
        #[arg(long, default_value_t = 1.1)]
        theta: f64,
        #[arg(long, default_value_t = 0.7)]
        phi: f64,
        #[arg(long, default_value_t = 1e-6)]
        eps_min: f64,
        #[arg(long, default_value_t = 1e-1)]
        eps_max: f64,
        #[arg(long, default_value_t = 41)]
        points: usize,
    },
    /// Check a chain of correlations against a state (needs --input).
    ChainVerify,
    /// Closed-chain sweep: states obeying the links and the closure are
    /// annihilated by the head.
    Prop2Check {
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, value_enum, default_value_t = Family::Both)]
        family: Family,
    },
    /// Four-qubit GHZ exclusions, local-model search and contradiction trace.
    Ghsz,
    /// Closure, local models and contradictions of a constraint set.
    LhvClosure,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Hardy { .. } => "hardy",
            Command::HardyOptimize { .. } => "hardy-optimize",
            Command::Sensitivity { .. } => "sensitivity",
            Command::ChainVerify => "chain-verify",
            Command::Prop2Check { .. } => "prop2-check",
            Command::Ghsz => "ghsz",
            Command::LhvClosure => "lhv-closure",
        }
    }
}

/// Result of a command, ready to be written.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Json(Value),
    Csv(String),
}

impl Output {
    pub fn render(&self) -> Result<String, CliError> {
        match self {
            Output::Json(v) => {
                let mut s = serde_json::to_string_pretty(v).map_err(|e| CliError::Internal(e.to_string()))?;
                s.push('\n');
                Ok(s)
            }
            Output::Csv(s) => Ok(s.clone()),
        }
    }
}

/// Every number finite and no nulls anywhere in `v`.
pub fn validate_output(v: &Value, path: &str) -> Result<(), CliError> {
    match v {
        Value::Null => Err(CliError::Internal(format!("null value at {path}"))),
        Value::Number(n) if n.as_f64().is_some_and(|x| !x.is_finite()) => {
            Err(CliError::Internal(format!("non-finite value at {path}")))
        }
        Value::Array(a) => a.iter().enumerate().try_for_each(|(i, x)| validate_output(x, &format!("{path}[{i}]"))),
        Value::Object(m) => m.iter().try_for_each(|(k, x)| validate_output(x, &format!("{path}.{k}"))),
        _ => Ok(()),
    }
}

pub fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Internal(e.to_string()))
}

/// Runs the command and wraps its result in the output envelope.
pub fn run(cli: &Cli) -> Result<Output, CliError> {
    if !(cli.tol.is_finite() && cli.tol > 0.0) {
        return Err(CliError::Validation(format!("--tol must be positive and finite, got {}", cli.tol)));
    }
    let result = commands::execute(cli)?;
    match (cli.format, result) {
        (Format::Csv, commands::CommandResult { csv: Some(csv), .. }) => Ok(Output::Csv(csv)),
        (Format::Csv, _) => Err(CliError::Validation(format!("csv output is not available for {}", cli.command.name()))),
        (Format::Json, r) => {
            let config = serde_json::to_value(cli).map_err(|e| CliError::Internal(e.to_string()))?;
            let envelope = serde_json::json!({
                "command": cli.command.name(),
                "config": config,
                "version": env!("CARGO_PKG_VERSION"),
                "result": r.json,
            });
            validate_output(&envelope, "$")?;
            Ok(Output::Json(envelope))
        }
    }
}

/// Writes the rendered output to `--output` or stdout.
pub fn emit(cli: &Cli, out: &Output) -> Result<(), CliError> {
    let text = out.render()?;
    match &cli.output {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Internal(format!("{}: {e}", path.display()))),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Internal(e.to_string()))
        }
    }
}

pub(crate) fn read_input<T: serde::de::DeserializeOwned>(cli: &Cli) -> Result<Option<T>, CliError> {
    let Some(path) = &cli.input else {
        return Ok(None);
    };
    let text = fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map(Some)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}
