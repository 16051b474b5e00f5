use std::path::{Path, PathBuf};

use clap::Args;
use nalgebra::DVector;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use super::sweep::{stability_sweep, SweepTable};
use super::{
    config_err, manifest_path, runtime, spec_hash, write_json, write_output, CommandOutcome, HarnessError,
    RunContext,
};
use crate::cocycle::{
    lyapunov_spectrum, pathwise_decay_estimate, DriverEnsemble, Linearization, LyapunovOptions, PathDecay,
    SegmentState,
};
use crate::equation::{EquationDocument, EquationSpec};
use crate::fbm::{FbmSampler, Hurst, SampledPath, SamplingMethod, UniformGrid};
use crate::lift::lift_piecewise_linear;
use crate::solver::{constant_history, Solver, SolverOptions};
use crate::spectrum::{find_roots, spectral_report, Rect};

fn hurst(h: f64) -> Result<Hurst, HarnessError> {
    Hurst::new(h).map_err(config_err)
}

fn to_spec(doc: &EquationDocument) -> Result<EquationSpec, HarnessError> {
    doc.to_spec().map_err(config_err)
}

fn params<T: Serialize>(args: &T) -> serde_json::Value {
    serde_json::to_value(args).expect("arguments serialize")
}

fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(runtime)?;
    for row in rows {
        w.write_record(&row).map_err(runtime)?;
    }
    w.into_inner().map_err(runtime)
}

/// Write the manifest next to `primary` and return the outcome unchanged.
fn finish(outcome: CommandOutcome, primary: &Path) -> Result<CommandOutcome, HarnessError> {
    write_json(&manifest_path(primary), &outcome.manifest())?;
    Ok(outcome)
}

fn default_step() -> f64 {
    1.0 / 64.0
}

fn default_hurst() -> f64 {
    0.4
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleFbmArgs {
    #[arg(long, default_value_t = default_hurst())]
    pub hurst: f64,
    #[arg(long, default_value_t = 1.0 / 256.0)]
    pub step: f64,
    /// History length and horizon: the grid covers `[-|T-|, T+]`.
    #[arg(long, num_args = 2, value_names = ["T_MINUS", "T_PLUS"], default_values_t = [0.0, 1.0], allow_negative_numbers = true)]
    pub span: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    /// auto, cholesky or circulant.
    #[arg(long, default_value = "auto")]
    pub method: String,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Default for SampleFbmArgs {
    fn default() -> Self {
        SampleFbmArgs {
            hurst: default_hurst(),
            step: 1.0 / 256.0,
            span: vec![0.0, 1.0],
            dim: 1,
            paths: 1,
            seed: None,
            method: "auto".into(),
            out: None,
        }
    }
}

fn sampling_method(name: &str) -> Result<SamplingMethod, HarnessError> {
    match name {
        "auto" => Ok(SamplingMethod::Auto),
        "cholesky" => Ok(SamplingMethod::Cholesky),
        #[cfg(feature = "circulant")]
        "circulant" => Ok(SamplingMethod::Circulant),
        other => Err(config_err(format!("unknown sampling method `{other}`"))),
    }
}

pub(crate) fn sample_fbm(args: &SampleFbmArgs, ctx: &RunContext) -> Result<CommandOutcome, HarnessError> {
    let seed = ctx.seed(args.seed);
    if args.span.len() != 2 {
        return Err(config_err("span takes two values"));
    }
    let grid = UniformGrid::from_span(args.step, args.span[0].abs(), args.span[1]).map_err(config_err)?;
    let sampler =
        FbmSampler::with_method(grid, hurst(args.hurst)?, args.dim, sampling_method(&args.method)?).map_err(config_err)?;
    let paths = sampler.sample(seed, args.paths);
    let mut header = vec!["path_id".to_string(), "t".to_string()];
    header.extend((0..args.dim).map(|c| format!("component_{c}")));
    let times = sampler.grid().times();
    let rows = paths.iter().enumerate().flat_map(|(p, path)| {
        times.iter().enumerate().map(move |(k, t)| {
            let mut row = vec![p.to_string(), fmt_f64(*t)];
            row.extend(path.value(k).iter().map(|x| fmt_f64(*x)));
            row
        })
    });
    let out = ctx.resolve(&args.out, "fbm.csv");
    let record = write_output(&out, &csv_bytes(&header, rows)?, "csv")?;
    finish(
        CommandOutcome {
            command: "sample-fbm".into(),
            seed: Some(seed),
            spec_sha256: None,
            parameters: params(args),
            summary: None,
            outputs: vec![record],
            partial_failure: None,
        },
        &out,
    )
}

/// Read one path of a `sample-fbm` CSV.
pub fn read_path_csv(path: &Path, path_id: usize) -> Result<SampledPath, HarnessError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| config_err(format!("{}: {e}", path.display())))?;
    let header = reader.headers().map_err(config_err)?.clone();
    if header.len() < 3 || &header[0] != "path_id" || &header[1] != "t" {
        return Err(config_err(format!("{}: expected columns path_id,t,component_*", path.display())));
    }
    let dim = header.len() - 2;
    let mut times = Vec::new();
    let mut values = Vec::new();
    for rec in reader.records() {
        let rec = rec.map_err(config_err)?;
        let id: usize = rec[0].parse().map_err(config_err)?;
        if id != path_id {
            continue;
        }
        times.push(rec[1].parse::<f64>().map_err(config_err)?);
        for c in 0..dim {
            values.push(rec[2 + c].parse::<f64>().map_err(config_err)?);
        }
    }
    if times.is_empty() {
        return Err(config_err(format!("{}: no rows for path {path_id}", path.display())));
    }
    let grid = UniformGrid::from_times(&times).map_err(config_err)?;
    SampledPath::new(grid, dim, values).map_err(config_err)
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiftArgs {
    /// Path CSV as written by `sample-fbm`.
    #[arg(long = "in")]
    #[serde(rename = "in")]
    pub input: Option<PathBuf>,
    /// Which path of the CSV to lift.
    #[arg(long, default_value_t = 0)]
    pub path_id: usize,
    #[arg(long, default_value_t = 1)]
    pub delay_steps: usize,
    /// Hölder exponent for the reported norms.
    #[arg(long, default_value_t = 0.35)]
    pub gamma: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Default for LiftArgs {
    fn default() -> Self {
        LiftArgs {
            input: None,
            path_id: 0,
            delay_steps: 1,
            gamma: 0.35,
            out: None,
        }
    }
}

pub(crate) fn lift(args: &LiftArgs, ctx: &RunContext) -> Result<CommandOutcome, HarnessError> {
    let input = args.input.as_ref().ok_or_else(|| config_err("lift needs --in"))?;
    if !(args.gamma > 1.0 / 3.0 && args.gamma < 0.5) {
        return Err(config_err(format!("gamma = {} must lie in (1/3, 1/2)", args.gamma)));
    }
    let path = read_path_csv(&ctx.resolve_input(input), args.path_id)?;
    let drp = lift_piecewise_linear(&path, args.delay_steps).map_err(config_err)?;
    let doc = drp.to_document(Some(args.gamma));
    let out = ctx.resolve(&args.out, "lift.json");
    let record = write_json(&out, &doc)?;
    finish(
        CommandOutcome {
            command: "lift".into(),
            seed: None,
            spec_sha256: None,
            parameters: params(args),
            summary: Some(json!({ "holder_norms": doc.holder_norms, "chen_residual": doc.chen_residual })),
            outputs: vec![record],
            partial_failure: None,
        },
        &out,
    )
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveArgs {
    /// Equation document (JSON).
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = default_hurst())]
    pub hurst: f64,
    #[arg(long, default_value_t = default_step())]
    pub step: f64,
    #[arg(long, default_value_t = 10.0)]
    pub horizon: f64,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub paths: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Default for SolveArgs {
    fn default() -> Self {
        SolveArgs {
            spec: None,
            hurst: default_hurst(),
            step: default_step(),
            horizon: 10.0,
            seed: None,
            paths: 1,
            out: None,
        }
    }
}

pub(crate) fn solve(args: &SolveArgs, ctx: &RunContext) -> Result<CommandOutcome, HarnessError> {
    let seed = ctx.seed(args.seed);
    let doc = ctx.equation(&args.spec)?;
    let spec = to_spec(&doc)?;
    let h = hurst(args.hurst)?;
    let solver = Solver::new(&spec, args.step).map_err(config_err)?;
    let steps = solver.steps_for(args.horizon).map_err(config_err)?;
    let ensemble = DriverEnsemble::new(h, spec.noise_dim, args.step, solver.delay_steps(), steps, seed, args.paths)
        .map_err(config_err)?;
    let xi = constant_history(doc.initial_value().map_err(config_err)?, solver.delay_steps(), spec.noise_dim);
    let results: Vec<Result<Vec<DVector<f64>>, String>> = (0..args.paths)
        .into_par_iter()
        .map(|i| {
            let drp = ensemble.driver(i).map_err(|e| e.to_string())?;
            let sol = solver.run(&xi, &drp, steps, &SolverOptions::quiet()).map_err(|e| e.to_string())?;
            Ok((0..=steps as isize).map(|j| sol.value(j).clone()).collect())
        })
        .collect();
    let mut header = vec!["path_id".to_string(), "t".to_string()];
    header.extend((0..spec.dim).map(|c| format!("y_{c}")));
    let mut rows = Vec::new();
    let mut failed = Vec::new();
    for (p, res) in results.iter().enumerate() {
        match res {
            Ok(values) => {
                for (j, v) in values.iter().enumerate() {
                    let mut row = vec![p.to_string(), fmt_f64(j as f64 * args.step)];
                    row.extend(v.iter().map(|x| fmt_f64(*x)));
                    rows.push(row);
                }
            }
            Err(e) => failed.push(json!({ "path_id": p, "error": e })),
        }
    }
    let out = ctx.resolve(&args.out, "solution.csv");
    let record = write_output(&out, &csv_bytes(&header, rows)?, "csv")?;
    let partial = (!failed.is_empty()).then(|| format!("{} of {} paths aborted", failed.len(), args.paths));
    finish(
        CommandOutcome {
            command: "solve".into(),
            seed: Some(seed),
            spec_sha256: Some(spec_hash(&doc)),
            parameters: params(args),
            summary: Some(json!({ "steps": steps, "completed": args.paths - failed.len(), "failed": failed })),
            outputs: vec![record],
            partial_failure: partial,
        },
        &out,
    )
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LyapunovArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = default_hurst())]
    pub hurst: f64,
    /// Grid step; overridden by `--segments`.
    #[arg(long)]
    pub step: Option<f64>,
    /// Steps per delay interval, `h = r / M`.
    #[arg(long)]
    pub segments: Option<usize>,
    /// QR iterations, one per delay interval.
    #[arg(long, default_value_t = 200)]
    pub iters: usize,
    /// Number of exponents.
    #[arg(long, default_value_t = 1)]
    pub k: usize,
    #[arg(long, default_value_t = 5)]
    pub burn_in: usize,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Default for LyapunovArgs {
    fn default() -> Self {
        LyapunovArgs {
            spec: None,
            hurst: default_hurst(),
            step: None,
            segments: None,
            iters: 200,
            k: 1,
            burn_in: 5,
            seed: None,
            out: None,
        }
    }
}

pub(crate) fn lyapunov(args: &LyapunovArgs, ctx: &RunContext) -> Result<CommandOutcome, HarnessError> {
    let seed = ctx.seed(args.seed);
    let doc = ctx.equation(&args.spec)?;
    let spec = to_spec(&doc)?;
    let step = match (args.segments, args.step) {
        (Some(0), _) => return Err(config_err("segments must be positive")),
        (Some(m), _) => spec.delay / m as f64,
        (None, Some(h)) => h,
        (None, None) => spec.delay / 32.0,
    };
    let solver = Solver::new(&spec, step).map_err(config_err)?;
    let k = solver.delay_steps();
    let steps = (args.burn_in + args.iters) * k;
    let drp = if spec.diffusion.is_zero() {
        // the driver does not enter; skip sampling
        let grid = UniformGrid::new(step, k, steps).map_err(config_err)?;
        let zeros = vec![0.0; grid.len() * spec.noise_dim];
        lift_piecewise_linear(&SampledPath::new(grid, spec.noise_dim, zeros).map_err(runtime)?, k).map_err(runtime)?
    } else {
        DriverEnsemble::new(hurst(args.hurst)?, spec.noise_dim, step, k, steps, seed, 1)
            .and_then(|e| e.driver(0))
            .map_err(config_err)?
    };
    let lin = if spec.has_zero_stationary_point() {
        Linearization::ZeroStationary
    } else {
        let y0 = doc.initial_value().map_err(config_err)?;
        Linearization::Along(SegmentState::constant(y0, k, spec.noise_dim))
    };
    let opts = LyapunovOptions {
        exponents: args.k,
        iterations: args.iters,
        burn_in: args.burn_in,
        frame_seed: seed,
        ..LyapunovOptions::default()
    };
    let report = lyapunov_spectrum(&spec, &drp, &lin, &opts).map_err(runtime)?;
    let out = ctx.resolve(&args.out, "lyapunov.json");
    let record = write_json(&out, &report)?;
    finish(
        CommandOutcome {
            command: "lyapunov".into(),
            seed: Some(seed),
            spec_sha256: Some(spec_hash(&doc)),
            parameters: params(args),
            summary: Some(json!({ "exponents": report.exponents, "stderr": report.stderr })),
            outputs: vec![record],
            partial_failure: None,
        },
        &out,
    )
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DecayArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = default_hurst())]
    pub hurst: f64,
    #[arg(long, default_value_t = default_step())]
    pub step: f64,
    /// Defaults to `30 r`.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 20)]
    pub paths: usize,
    /// Scale the diffusion over `n` evenly spaced values in `[e0, e1]`.
    #[arg(long, num_args = 3, value_names = ["E0", "E1", "N"])]
    pub epsilon_sweep: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Default for DecayArgs {
    fn default() -> Self {
        DecayArgs {
            spec: None,
            hurst: default_hurst(),
            step: default_step(),
            horizon: None,
            seed: None,
            paths: 20,
            epsilon_sweep: None,
            out: None,
        }
    }
}

fn epsilon_grid(v: &[f64]) -> Result<Vec<f64>, HarnessError> {
    let [e0, e1, n] = v else {
        return Err(config_err("epsilon grid takes three values: e0 e1 n"));
    };
    if *n < 1.0 || n.fract() != 0.0 || !e0.is_finite() || !e1.is_finite() {
        return Err(config_err(format!("bad epsilon grid {e0} {e1} {n}")));
    }
    let n = *n as usize;
    if n == 1 {
        return Ok(vec![*e0]);
    }
    Ok((0..n).map(|i| e0 + (e1 - e0) * i as f64 / (n - 1) as f64).collect())
}

pub(crate) fn decay(args: &DecayArgs, ctx: &RunContext) -> Result<CommandOutcome, HarnessError> {
    let seed = ctx.seed(args.seed);
    let doc = ctx.equation(&args.spec)?;
    let spec = to_spec(&doc)?;
    let horizon = args.horizon.unwrap_or(30.0 * spec.delay);
    if let Some(grid) = &args.epsilon_sweep {
        let eps = epsilon_grid(grid)?;
        let table = stability_sweep(&doc, &eps, hurst(args.hurst)?, args.step, horizon, seed, args.paths)?;
        return write_sweep("decay", &table, &doc, seed, params(args), ctx.resolve(&args.out, "sweep.csv"));
    }
    let ensemble = DriverEnsemble::for_spec(&spec, hurst(args.hurst)?, args.step, horizon, seed, args.paths)
        .map_err(config_err)?;
    let solver = Solver::new(&spec, args.step).map_err(config_err)?;
    let xi = constant_history(doc.initial_value().map_err(config_err)?, solver.delay_steps(), spec.noise_dim);
    let summary = pathwise_decay_estimate(&spec, &xi, &ensemble, horizon).map_err(config_err)?;
    let rows = summary.paths.iter().enumerate().map(|(p, d)| {
        let (status, slope, error) = match d {
            PathDecay::Slope(s) => ("ok", fmt_f64(*s), String::new()),
            PathDecay::Degenerate => ("degenerate", String::new(), String::new()),
            PathDecay::Aborted(e) => ("aborted", String::new(), e.clone()),
        };
        vec![p.to_string(), status.to_string(), slope, error]
    });
    let header: Vec<String> = ["path_id", "status", "slope", "error"].map(String::from).to_vec();
    let out = ctx.resolve(&args.out, "decay.csv");
    let record = write_output(&out, &csv_bytes(&header, rows)?, "csv")?;
    let partial = (summary.aborted > 0).then(|| format!("{} of {} paths aborted", summary.aborted, summary.paths.len()));
    finish(
        CommandOutcome {
            command: "decay".into(),
            seed: Some(seed),
            spec_sha256: Some(spec_hash(&doc)),
            parameters: params(args),
            summary: Some(json!({
                "median_slope": summary.median,
                "abort_fraction": summary.abort_fraction(),
                "degenerate": summary.degenerate,
            })),
            outputs: vec![record],
            partial_failure: partial,
        },
        &out,
    )
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    /// Search rectangle; by default the region grows until it holds the
    /// rightmost roots.
    #[arg(long, num_args = 4, value_names = ["RE0", "RE1", "IM0", "IM1"], allow_negative_numbers = true)]
    pub region: Option<Vec<f64>>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Default for SpectrumArgs {
    fn default() -> Self {
        SpectrumArgs {
            spec: None,
            region: None,
            out: None,
        }
    }
}

pub(crate) fn spectrum(args: &SpectrumArgs, ctx: &RunContext) -> Result<CommandOutcome, HarnessError> {
    let doc = ctx.equation(&args.spec)?;
    let spec = to_spec(&doc)?;
    let report = match &args.region {
        Some(r) if r.len() == 4 => find_roots(&spec, Rect::new(r[0], r[1], r[2], r[3])),
        Some(_) => return Err(config_err("region takes four values: re0 re1 im0 im1")),
        None => spectral_report(&spec),
    }
    .map_err(runtime)?;
    let out = ctx.resolve(&args.out, "roots.json");
    let record = write_json(&out, &report)?;
    finish(
        CommandOutcome {
            command: "spectrum".into(),
            seed: None,
            spec_sha256: Some(spec_hash(&doc)),
            parameters: params(args),
            summary: Some(json!({ "abscissa": report.abscissa, "roots": report.root_count() })),
            outputs: vec![record],
            partial_failure: None,
        },
        &out,
    )
}

#[derive(Args, Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepArgs {
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long, default_value_t = default_hurst())]
    pub hurst: f64,
    #[arg(long, default_value_t = default_step())]
    pub step: f64,
    /// Defaults to `30 r`.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value_t = 20)]
    pub paths: usize,
    #[arg(long, num_args = 3, value_names = ["E0", "E1", "N"], default_values_t = [0.0, 1.0, 11.0])]
    pub epsilons: Vec<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Default for SweepArgs {
    fn default() -> Self {
        SweepArgs {
            spec: None,
            hurst: default_hurst(),
            step: default_step(),
            horizon: None,
            seed: None,
            paths: 20,
            epsilons: vec![0.0, 1.0, 11.0],
            out: None,
        }
    }
}

pub(crate) fn stability_sweep_cmd(args: &SweepArgs, ctx: &RunContext) -> Result<CommandOutcome, HarnessError> {
    let seed = ctx.seed(args.seed);
    let doc = ctx.equation(&args.spec)?;
    let delay = to_spec(&doc)?.delay;
    let eps = epsilon_grid(&args.epsilons)?;
    let horizon = args.horizon.unwrap_or(30.0 * delay);
    let table = stability_sweep(&doc, &eps, hurst(args.hurst)?, args.step, horizon, seed, args.paths)?;
    write_sweep("stability-sweep", &table, &doc, seed, params(args), ctx.resolve(&args.out, "sweep.csv"))
}

fn write_sweep(
    command: &str,
    table: &SweepTable,
    doc: &EquationDocument,
    seed: u64,
    parameters: serde_json::Value,
    out: PathBuf,
) -> Result<CommandOutcome, HarnessError> {
    let record = write_output(&out, &table.to_csv()?, "csv")?;
    finish(
        CommandOutcome {
            command: command.into(),
            seed: Some(seed),
            spec_sha256: Some(spec_hash(doc)),
            parameters,
            summary: Some(json!({
                "abscissa": table.abscissa,
                "largest_stable_epsilon": table.largest_stable_epsilon,
                "monotone_trend": table.monotone_trend,
            })),
            outputs: vec![record],
            partial_failure: None,
        },
        &out,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{Cli, Command};
    use clap::Parser;

    fn parse(args: &[&str]) -> Command {
        Cli::try_parse_from(std::iter::once("rough-delay").chain(args.iter().copied()))
            .unwrap()
            .command
    }

    #[test]
    fn flag_defaults_match_config_defaults() {
        match parse(&["sample-fbm"]) {
            Command::SampleFbm(a) => assert_eq!(a, SampleFbmArgs::default()),
            c => panic!("{c:?}"),
        }
        match parse(&["lift"]) {
            Command::Lift(a) => assert_eq!(a, LiftArgs::default()),
            c => panic!("{c:?}"),
        }
        match parse(&["solve"]) {
            Command::Solve(a) => assert_eq!(a, SolveArgs::default()),
            c => panic!("{c:?}"),
        }
        match parse(&["lyapunov"]) {
            Command::Lyapunov(a) => assert_eq!(a, LyapunovArgs::default()),
            c => panic!("{c:?}"),
        }
        match parse(&["decay"]) {
            Command::Decay(a) => assert_eq!(a, DecayArgs::default()),
            c => panic!("{c:?}"),
        }
        match parse(&["spectrum"]) {
            Command::Spectrum(a) => assert_eq!(a, SpectrumArgs::default()),
            c => panic!("{c:?}"),
        }
        match parse(&["stability-sweep"]) {
            Command::StabilitySweep(a) => assert_eq!(a, SweepArgs::default()),
            c => panic!("{c:?}"),
        }
    }

    #[test]
    fn negative_span_parses() {
        match parse(&["sample-fbm", "--span", "-1", "2"]) {
            Command::SampleFbm(a) => assert_eq!(a.span, vec![-1.0, 2.0]),
            c => panic!("{c:?}"),
        }
    }

    #[test]
    fn epsilon_grid_endpoints() {
        let g = epsilon_grid(&[0.0, 1.0, 11.0]).unwrap();
        assert_eq!(g.len(), 11);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[10], 1.0);
        assert!((g[3] - 0.3).abs() < 1e-15);
        assert!(epsilon_grid(&[0.0, 1.0, 2.5]).is_err());
    }
}
