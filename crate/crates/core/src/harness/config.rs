//! TOML scenario files.
//!
//! ```toml
//! name = "linear-scalar"
//! seed = 7
//! out_dir = "out"          # relative to this file
//!
//! [equation]               # used by tasks without `spec`
//! dim = 1
//! noise_dim = 1
//! delay = 1.0
//! drift = { current = [-1.0], memory = [0.3] }
//! measure = { atoms = [{ location = -1.0, weight = [1.0] }] }
//! diffusion = { profile = "linear", current = [0.05] }
//!
//! [[task]]
//! kind = "solve"
//! paths = 4
//! horizon = 5.0
//!
//! [[task]]
//! kind = "spectrum"
//! out = "roots.json"
//! ```
//!
//! Task keys are the long flag names of the matching subcommand with `-`
//! replaced by `_`. Tasks without `seed` use the scenario seed, tasks
//! without `out` write `NN-<kind>.<ext>`. A task that fails leaves a
//! `<output>.FAILED` file holding the error and the remaining tasks still
//! run.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    config_err, execute, sha256_hex, write_json, write_output, Command, DecayArgs, HarnessError, LiftArgs,
    LyapunovArgs, Manifest, RunContext, SampleFbmArgs, SolveArgs, SpectrumArgs, SweepArgs, OUT_DIR_ENV,
    MANIFEST_SCHEMA_VERSION,
};
use crate::equation::EquationDocument;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub equation: Option<EquationDocument>,
    #[serde(default, rename = "task")]
    pub tasks: Vec<Task>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Task {
    SampleFbm(SampleFbmArgs),
    Lift(LiftArgs),
    Solve(SolveArgs),
    Lyapunov(LyapunovArgs),
    Decay(DecayArgs),
    Spectrum(SpectrumArgs),
    StabilitySweep(SweepArgs),
}

impl Task {
    pub fn kind(&self) -> &'static str {
        match self {
            Task::SampleFbm(_) => "sample-fbm",
            Task::Lift(_) => "lift",
            Task::Solve(_) => "solve",
            Task::Lyapunov(_) => "lyapunov",
            Task::Decay(_) => "decay",
            Task::Spectrum(_) => "spectrum",
            Task::StabilitySweep(_) => "stability-sweep",
        }
    }

    fn extension(&self) -> &'static str {
        match self {
            Task::Lift(_) | Task::Lyapunov(_) | Task::Spectrum(_) => "json",
            _ => "csv",
        }
    }

    fn out_mut(&mut self) -> &mut Option<PathBuf> {
        match self {
            Task::SampleFbm(a) => &mut a.out,
            Task::Lift(a) => &mut a.out,
            Task::Solve(a) => &mut a.out,
            Task::Lyapunov(a) => &mut a.out,
            Task::Decay(a) => &mut a.out,
            Task::Spectrum(a) => &mut a.out,
            Task::StabilitySweep(a) => &mut a.out,
        }
    }

    fn into_command(self) -> Command {
        match self {
            Task::SampleFbm(a) => Command::SampleFbm(a),
            Task::Lift(a) => Command::Lift(a),
            Task::Solve(a) => Command::Solve(a),
            Task::Lyapunov(a) => Command::Lyapunov(a),
            Task::Decay(a) => Command::Decay(a),
            Task::Spectrum(a) => Command::Spectrum(a),
            Task::StabilitySweep(a) => Command::StabilitySweep(a),
        }
    }
}

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        toml::from_str(text).map_err(config_err)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Ok,
    Partial,
    ConfigError,
    Failed,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TaskRecord {
    pub index: usize,
    pub kind: String,
    pub output: String,
    pub status: TaskStatus,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub manifest: Option<Manifest>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScenarioOutcome {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub scenario: String,
    pub seed: u64,
    pub config_sha256: String,
    pub tasks: Vec<TaskRecord>,
    #[serde(skip)]
    pub out_dir: PathBuf,
}

impl ScenarioOutcome {
    /// 2 if any task had a configuration error, 1 if any failed or was
    /// partial, else 0.
    pub fn exit_code(&self) -> i32 {
        let has = |s: TaskStatus| self.tasks.iter().any(|t| t.status == s);
        if has(TaskStatus::ConfigError) {
            2
        } else if has(TaskStatus::Failed) || has(TaskStatus::Partial) {
            1
        } else {
            0
        }
    }
}

fn marker_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().map(|f| f.to_os_string()).unwrap_or_default();
    name.push(".FAILED");
    output.with_file_name(name)
}

/// Run every task of the scenario at `path`, writing outputs, per-task
/// manifests and a scenario `manifest.json`.
pub fn run_scenario(path: &Path) -> Result<ScenarioOutcome, HarnessError> {
    let text = fs::read_to_string(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let scenario = Scenario::parse(&text)?;
    let config_dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new(".")).to_path_buf();
    let out_dir = match &scenario.out_dir {
        Some(d) => config_dir.join(d),
        None => std::env::var_os(OUT_DIR_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| config_dir.join(&scenario.name)),
    };
    let ctx = RunContext {
        input_base: config_dir,
        relative_base: out_dir.clone(),
        default_dir: out_dir.clone(),
        default_seed: scenario.seed,
        equation: scenario.equation.clone(),
    };
    let mut records = Vec::with_capacity(scenario.tasks.len());
    for (index, task) in scenario.tasks.iter().enumerate() {
        let mut task = task.clone();
        let kind = task.kind();
        let out = task
            .out_mut()
            .get_or_insert_with(|| PathBuf::from(format!("{index:02}-{kind}.{}", task_ext(&scenario.tasks[index]))))
            .clone();
        let output = ctx.resolve(&Some(out), "");
        let marker = marker_path(&output);
        let record = match execute(&task.into_command(), &ctx) {
            Ok(outcome) => {
                if marker.exists() {
                    fs::remove_file(&marker).map_err(super::runtime)?;
                }
                TaskRecord {
                    index,
                    kind: kind.into(),
                    output: file_name(&output),
                    status: if outcome.partial_failure.is_some() { TaskStatus::Partial } else { TaskStatus::Ok },
                    error: outcome.partial_failure.clone(),
                    manifest: Some(outcome.manifest()),
                }
            }
            Err(e) => {
                write_output(&marker, format!("{e}\n").as_bytes(), "text")?;
                TaskRecord {
                    index,
                    kind: kind.into(),
                    output: file_name(&output),
                    status: match e {
                        HarnessError::Config(_) => TaskStatus::ConfigError,
                        HarnessError::Runtime(_) => TaskStatus::Failed,
                    },
                    error: Some(e.to_string()),
                    manifest: None,
                }
            }
        };
        records.push(record);
    }
    let outcome = ScenarioOutcome {
        schema_version: MANIFEST_SCHEMA_VERSION,
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: scenario.name.clone(),
        seed: scenario.seed,
        config_sha256: sha256_hex(text.as_bytes()),
        tasks: records,
        out_dir: out_dir.clone(),
    };
    write_json(&out_dir.join("manifest.json"), &outcome)?;
    Ok(outcome)
}

fn task_ext(task: &Task) -> &'static str {
    task.extension()
}

fn file_name(p: &Path) -> String {
    p.file_name().map(|f| f.to_string_lossy().into_owned()).unwrap_or_default()
}
