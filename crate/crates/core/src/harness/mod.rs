//! Command-line and configuration driven experiment runner.
//!
//! Every command writes its primary output (CSV or JSON) plus a
//! `<output>.manifest.json` naming the seed, the SHA-256 of the canonical
//! equation document, the crate version and the hash of each output file.

mod commands;
mod config;
mod sweep;

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::equation::EquationDocument;

pub use commands::{
    DecayArgs, LiftArgs, LyapunovArgs, SampleFbmArgs, SolveArgs, SpectrumArgs, SweepArgs,
};
pub use config::{run_scenario, Scenario, ScenarioOutcome, Task, TaskRecord, TaskStatus};
pub use sweep::{stability_sweep, SweepRow, SweepTable};

/// Default output directory when `--out` is omitted.
pub const OUT_DIR_ENV: &str = "ROUGH_DELAY_OUT_DIR";
pub const MANIFEST_SCHEMA_VERSION: u32 = 1;
pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const JSON_SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum HarnessError {
    /// Invalid configuration or input; exit code 2.
    #[error("configuration error: {0}")]
    Config(String),
    /// Failure while running; exit code 1.
    #[error("runtime error: {0}")]
    Runtime(String),
}

impl HarnessError {
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Runtime(_) => 1,
        }
    }
}

pub(crate) fn runtime(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Runtime(e.to_string())
}

pub(crate) fn config_err(e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Config(e.to_string())
}

#[derive(Debug, Parser)]
#[command(name = "rough-delay", version, about = "Rough delay equations driven by fractional Brownian motion")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample fBm paths on a uniform grid.
    SampleFbm(SampleFbmArgs),
    /// Build the delayed rough path of one fBm sample.
    Lift(LiftArgs),
    /// Solve the delay equation for an ensemble of drivers.
    Solve(SolveArgs),
    /// Estimate Lyapunov exponents of the linearized cocycle.
    Lyapunov(LyapunovArgs),
    /// Pathwise decay slopes, optionally over an epsilon sweep.
    Decay(DecayArgs),
    /// Characteristic roots of the deterministic drift.
    Spectrum(SpectrumArgs),
    /// Median decay slope as the diffusion is scaled by epsilon.
    StabilitySweep(SweepArgs),
    /// Run a TOML scenario file.
    Run {
        /// Scenario file.
        config: PathBuf,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub format: String,
    pub schema_version: u32,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    pub status: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    pub seed: Option<u64>,
    pub spec_sha256: Option<String>,
    pub parameters: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summary: Option<serde_json::Value>,
    pub outputs: Vec<OutputRecord>,
}

/// Result of one command: files written plus provenance.
#[derive(Clone, Debug)]
pub struct CommandOutcome {
    pub command: String,
    pub seed: Option<u64>,
    pub spec_sha256: Option<String>,
    pub parameters: serde_json::Value,
    /// Headline numbers, repeated in the manifest.
    pub summary: Option<serde_json::Value>,
    pub outputs: Vec<OutputRecord>,
    /// Set when part of the work failed but outputs were still written.
    pub partial_failure: Option<String>,
}

impl CommandOutcome {
    pub fn manifest(&self) -> Manifest {
        Manifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: self.command.clone(),
            status: if self.partial_failure.is_some() { "partial" } else { "ok" }.to_string(),
            error: self.partial_failure.clone(),
            seed: self.seed,
            spec_sha256: self.spec_sha256.clone(),
            parameters: self.parameters.clone(),
            summary: self.summary.clone(),
            outputs: self.outputs.clone(),
        }
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Hash of the canonical (re-serialized) equation document.
pub fn spec_hash(doc: &EquationDocument) -> String {
    sha256_hex(serde_json::to_string(doc).expect("serializable").as_bytes())
}

pub fn load_equation(path: &Path) -> Result<EquationDocument, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| config_err(format!("{}: {e}", path.display())))
}

/// Directory for outputs when no explicit path is given.
pub fn default_out_dir() -> PathBuf {
    std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("."))
}

/// Where inputs are read from and outputs go, plus scenario-level defaults.
#[derive(Clone, Debug)]
pub struct RunContext {
    /// Base for relative input paths (`--spec`, `--in`).
    pub input_base: PathBuf,
    /// Base for relative `out` paths.
    pub relative_base: PathBuf,
    /// Directory for outputs whose path is omitted.
    pub default_dir: PathBuf,
    /// Seed used by commands that were not given one.
    pub default_seed: u64,
    /// Equation used by commands that were not given `--spec`.
    pub equation: Option<EquationDocument>,
}

impl RunContext {
    /// Relative paths resolve against the working directory, omitted ones
    /// against the directory named by the environment.
    pub fn cli() -> Self {
        RunContext {
            input_base: PathBuf::from("."),
            relative_base: PathBuf::from("."),
            default_dir: default_out_dir(),
            default_seed: 0,
            equation: None,
        }
    }

    /// Everything relative to `dir`.
    pub fn in_dir(dir: &Path) -> Self {
        RunContext {
            input_base: dir.to_path_buf(),
            relative_base: dir.to_path_buf(),
            default_dir: dir.to_path_buf(),
            default_seed: 0,
            equation: None,
        }
    }

    pub(crate) fn resolve(&self, out: &Option<PathBuf>, default_name: &str) -> PathBuf {
        match out {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => self.relative_base.join(p),
            None => self.default_dir.join(default_name),
        }
    }

    /// Relative inputs are looked up next to the outputs first (so scenario
    /// tasks can consume earlier outputs), then under `input_base`.
    pub(crate) fn resolve_input(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            return path.to_path_buf();
        }
        let produced = self.relative_base.join(path);
        if produced.exists() {
            produced
        } else {
            self.input_base.join(path)
        }
    }

    pub(crate) fn seed(&self, explicit: Option<u64>) -> u64 {
        explicit.unwrap_or(self.default_seed)
    }

    /// The equation named by `spec`, or the context default.
    pub(crate) fn equation(&self, spec: &Option<PathBuf>) -> Result<EquationDocument, HarnessError> {
        match (spec, &self.equation) {
            (Some(p), _) => load_equation(&self.resolve_input(p)),
            (None, Some(doc)) => Ok(doc.clone()),
            (None, None) => Err(config_err("no equation given (use --spec)")),
        }
    }
}

pub(crate) fn write_output(path: &Path, bytes: &[u8], format: &str) -> Result<OutputRecord, HarnessError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| runtime(format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, bytes).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
    Ok(OutputRecord {
        file: path.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: sha256_hex(bytes),
        format: format.to_string(),
        schema_version: if format == "csv" { CSV_SCHEMA_VERSION } else { JSON_SCHEMA_VERSION },
    })
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<OutputRecord, HarnessError> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    write_output(path, text.as_bytes(), "json")
}

pub(crate) fn manifest_path(primary: &Path) -> PathBuf {
    let mut name = primary.file_name().map(|f| f.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    primary.with_file_name(name)
}

/// Run one parsed command, writing its outputs and manifest.
pub fn execute(command: &Command, ctx: &RunContext) -> Result<CommandOutcome, HarnessError> {
    match command {
        Command::SampleFbm(a) => commands::sample_fbm(a, ctx),
        Command::Lift(a) => commands::lift(a, ctx),
        Command::Solve(a) => commands::solve(a, ctx),
        Command::Lyapunov(a) => commands::lyapunov(a, ctx),
        Command::Decay(a) => commands::decay(a, ctx),
        Command::Spectrum(a) => commands::spectrum(a, ctx),
        Command::StabilitySweep(a) => commands::stability_sweep_cmd(a, ctx),
        Command::Run { .. } => Err(config_err("nested `run` is not supported")),
    }
}

fn exit_code_of(outcome: &CommandOutcome) -> i32 {
    if outcome.partial_failure.is_some() {
        1
    } else {
        0
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn run_cli<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Run { config } => run_scenario(config).map(|o| o.exit_code()),
        other => execute(other, &RunContext::cli()).map(|o| exit_code_of(&o)),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
