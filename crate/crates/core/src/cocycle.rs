//! Segment-space cocycle, its linearization, Lyapunov spectra by iterated QR,
//! and pathwise decay rates.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::controlled::ControlledSegment;
use crate::equation::EquationSpec;
use crate::fbm::{FbmError, FbmSampler, Hurst, UniformGrid};
use crate::lift::{lift_piecewise_linear, DelayedRoughPath, LiftError};
use crate::solver::{Solver, SolverError, SolverOptions, SolutionPath};
use crate::spectrum::log_sup_slope;

#[derive(Debug, Error, PartialEq)]
pub enum CocycleError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error(transparent)]
    Lift(#[from] LiftError),
    #[error(transparent)]
    Fbm(#[from] FbmError),
    #[error("the equation has no zero stationary point (G(0, 0) != 0); supply a base trajectory")]
    NotStationary,
    #[error("state vector has {got} entries, expected {expected}")]
    StateSize { got: usize, expected: usize },
    #[error("requested {requested} exponents, at most {max} supported")]
    TooManyExponents { requested: usize, max: usize },
    #[error("horizon {horizon} is shorter than 20 delays ({min})")]
    HorizonTooShort { horizon: f64, min: f64 },
    #[error("every path was aborted")]
    AllAborted,
    #[error("iteration count must be positive")]
    NoIterations,
    #[error("tangent frame collapsed completely in window {0}")]
    FrameCollapse(usize),
}

pub const MAX_EXPONENTS: usize = 15;

/// A point of the discretized segment space: values and Gubinelli
/// derivatives at the `M + 1` nodes of `[-r, 0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SegmentState(pub ControlledSegment);

impl SegmentState {
    pub fn constant(value: DVector<f64>, delay_steps: usize, noise_dim: usize) -> Self {
        SegmentState(ControlledSegment::constant(-(delay_steps as isize), delay_steps + 1, value, noise_dim))
    }

    pub fn segment(&self) -> &ControlledSegment {
        &self.0
    }

    pub fn flat_len(nodes: usize, n: usize, d: usize) -> usize {
        nodes * n * (1 + d)
    }

    /// Values node by node, then derivatives node by node (row-major).
    pub fn flatten(&self) -> DVector<f64> {
        let seg = &self.0;
        let (n, d) = (seg.state_dim(), seg.noise_dim());
        let mut out = Vec::with_capacity(Self::flat_len(seg.len(), n, d));
        for v in seg.values() {
            out.extend(v.iter());
        }
        for m in seg.derivs() {
            for a in 0..n {
                for b in 0..d {
                    out.push(m[(a, b)]);
                }
            }
        }
        DVector::from_vec(out)
    }

    pub fn unflatten(flat: &DVector<f64>, delay_steps: usize, n: usize, d: usize) -> Result<Self, CocycleError> {
        let nodes = delay_steps + 1;
        let expected = Self::flat_len(nodes, n, d);
        if flat.len() != expected {
            return Err(CocycleError::StateSize { got: flat.len(), expected });
        }
        let values = (0..nodes).map(|i| DVector::from_column_slice(&flat.as_slice()[i * n..(i + 1) * n])).collect();
        let off = nodes * n;
        let derivs = (0..nodes)
            .map(|i| DMatrix::from_row_slice(n, d, &flat.as_slice()[off + i * n * d..off + (i + 1) * n * d]))
            .collect();
        Ok(SegmentState(
            ControlledSegment::new(-(delay_steps as isize), values, derivs).map_err(SolverError::from)?,
        ))
    }
}

/// `φ^m(ξ)`: the solution segment on `[(m-1) r, m r]`, driven by `drp`
/// (which must cover `[-r, m r]`).
pub fn cocycle_apply(spec: &EquationSpec, state: &SegmentState, drp: &DelayedRoughPath, m: usize) -> Result<SegmentState, CocycleError> {
    if m == 0 {
        return Ok(state.clone());
    }
    let solver = Solver::new(spec, drp.step())?;
    let k = solver.delay_steps();
    let sol = solver.run(&state.0, drp, m * k, &SolverOptions::quiet())?;
    Ok(SegmentState(sol.segment(m)))
}

/// Trajectory at which the cocycle is linearized.
#[derive(Clone, Debug)]
pub enum Linearization {
    /// `Y ≡ 0`, valid when `G(0, 0) = 0`.
    ZeroStationary,
    /// The solution started from this state.
    Along(SegmentState),
}

/// Tangent cocycle `ψ^m = Dφ` over consecutive `r`-windows of one driver.
pub struct LinearCocycle<'a> {
    solver: Solver,
    drp: &'a DelayedRoughPath,
    base: SolutionPath,
}

impl<'a> LinearCocycle<'a> {
    /// Precompute the base trajectory over `windows` delays.
    pub fn new(spec: &EquationSpec, drp: &'a DelayedRoughPath, lin: &Linearization, windows: usize) -> Result<Self, CocycleError> {
        let solver = Solver::new(spec, drp.step())?;
        let k = solver.delay_steps();
        let start = match lin {
            Linearization::ZeroStationary => {
                if !spec.has_zero_stationary_point() {
                    return Err(CocycleError::NotStationary);
                }
                SegmentState::constant(DVector::zeros(spec.dim), k, spec.noise_dim)
            }
            Linearization::Along(s) => s.clone(),
        };
        let base = solver.run(&start.0, drp, windows * k, &SolverOptions::quiet())?;
        Ok(LinearCocycle { solver, drp, base })
    }

    pub fn delay_steps(&self) -> usize {
        self.solver.delay_steps()
    }

    pub fn windows(&self) -> usize {
        self.base.steps() / self.delay_steps()
    }

    pub fn state_len(&self) -> usize {
        let spec = self.solver.spec();
        SegmentState::flat_len(self.delay_steps() + 1, spec.dim, spec.noise_dim)
    }

    /// Base trajectory restarted at the beginning of window `m` (1-based),
    /// on the driver shifted to that window.
    pub fn window(&self, m: usize) -> Result<(SolutionPath, DelayedRoughPath), CocycleError> {
        let k = self.delay_steps();
        let shifted = self.drp.shift(((m - 1) * k) as isize)?;
        let base = self.solver.run(&self.base.window_ending_at((m - 1) * k), &shifted, k, &SolverOptions::quiet())?;
        Ok((base, shifted))
    }

    /// `ψ` over window `m` applied to `v`, given the output of
    /// [`LinearCocycle::window`].
    pub fn apply_in(&self, window: &(SolutionPath, DelayedRoughPath), v: &SegmentState) -> Result<SegmentState, CocycleError> {
        let out = self.solver.tangent(&window.0, &window.1, &v.0)?;
        Ok(SegmentState(out.segment(1)))
    }

    pub fn apply(&self, m: usize, v: &SegmentState) -> Result<SegmentState, CocycleError> {
        self.apply_in(&self.window(m)?, v)
    }

    fn apply_flat(&self, window: &(SolutionPath, DelayedRoughPath), v: &DVector<f64>) -> Result<DVector<f64>, CocycleError> {
        let spec = self.solver.spec();
        let s = SegmentState::unflatten(v, self.delay_steps(), spec.dim, spec.noise_dim)?;
        Ok(self.apply_in(window, &s)?.flatten())
    }

    /// Matrix of `ψ` over window `m` in the flattened coordinates.
    pub fn matrix(&self, m: usize) -> Result<DMatrix<f64>, CocycleError> {
        let window = self.window(m)?;
        let dim = self.state_len();
        let mut out = DMatrix::zeros(dim, dim);
        for c in 0..dim {
            let mut e = DVector::zeros(dim);
            e[c] = 1.0;
            out.set_column(c, &self.apply_flat(&window, &e)?);
        }
        Ok(out)
    }
}

/// Matrix of the linearized cocycle over window `m` (1-based).
pub fn linear_cocycle_matrix(spec: &EquationSpec, drp: &DelayedRoughPath, lin: &Linearization, m: usize) -> Result<DMatrix<f64>, CocycleError> {
    LinearCocycle::new(spec, drp, lin, m)?.matrix(m)
}

#[derive(Clone, Debug)]
pub struct LyapunovOptions {
    pub exponents: usize,
    pub iterations: usize,
    /// Windows discarded before averaging.
    pub burn_in: usize,
    /// Seed of the random initial frame.
    pub frame_seed: u64,
    /// Blocks for the standard-error estimate.
    pub blocks: usize,
}

impl Default for LyapunovOptions {
    fn default() -> Self {
        LyapunovOptions {
            exponents: 1,
            iterations: 200,
            burn_in: 5,
            frame_seed: 0,
            blocks: 10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LyapunovReport {
    /// Exponents per unit time, non-increasing.
    pub exponents: Vec<f64>,
    pub stderr: Vec<f64>,
    pub iterations: usize,
    pub burn_in: usize,
    pub delay: f64,
    pub segments: usize,
    /// `log |R_ii|` per recorded iteration.
    pub log_diagonals: Vec<Vec<f64>>,
    /// Number of exponents requested, if the frame collapsed and had to be
    /// reduced.
    pub collapsed_from: Option<usize>,
}

fn random_frame(dim: usize, k: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let raw = DMatrix::from_fn(dim, k, |_, _| StandardNormal.sample(&mut rng));
    raw.qr().q()
}

fn block_stderr(series: &[f64], blocks: usize) -> f64 {
    let blocks = blocks.min(series.len()).max(1);
    let size = series.len() / blocks;
    if blocks < 2 || size == 0 {
        return f64::NAN;
    }
    let means: Vec<f64> = (0..blocks)
        .map(|b| series[b * size..(b + 1) * size].iter().sum::<f64>() / size as f64)
        .collect();
    let mean = means.iter().sum::<f64>() / blocks as f64;
    let var = means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (blocks - 1) as f64;
    (var / blocks as f64).sqrt()
}

/// Iterated QR with a given initial frame (columns need not be orthonormal).
pub fn lyapunov_spectrum_from_frame(
    spec: &EquationSpec,
    drp: &DelayedRoughPath,
    lin: &Linearization,
    frame: DMatrix<f64>,
    opts: &LyapunovOptions,
) -> Result<LyapunovReport, CocycleError> {
    if opts.iterations == 0 {
        return Err(CocycleError::NoIterations);
    }
    let total = opts.burn_in + opts.iterations;
    let cocycle = LinearCocycle::new(spec, drp, lin, total)?;
    let requested = frame.ncols();
    let mut q = frame.qr().q();
    let mut k = requested;
    let mut collapsed_from = None;
    let mut logs: Vec<Vec<f64>> = Vec::with_capacity(opts.iterations);
    for m in 1..=total {
        let window = cocycle.window(m)?;
        let mut img = DMatrix::zeros(q.nrows(), k);
        for c in 0..k {
            img.set_column(c, &cocycle.apply_flat(&window, &q.column(c).into_owned())?);
        }
        let qr = img.qr();
        let r = qr.r();
        let diag: Vec<f64> = (0..k).map(|i| r[(i, i)].abs()).collect();
        let mut healthy = diag.iter().take_while(|v| **v > 1e-250 && v.is_finite()).count();
        if healthy < k {
            healthy = healthy.max(1);
            if diag[0] <= 1e-250 || !diag[0].is_finite() {
                return Err(CocycleError::FrameCollapse(m));
            }
            collapsed_from.get_or_insert(requested);
            k = healthy;
            for l in logs.iter_mut() {
                l.truncate(k);
            }
        }
        let mut qm = qr.q();
        // fix signs so that R has a positive diagonal
        for c in 0..k {
            if r[(c, c)] < 0.0 {
                let col = -qm.column(c);
                qm.set_column(c, &col);
            }
        }
        q = qm.columns(0, k).into_owned();
        if m > opts.burn_in {
            logs.push(diag[..k].iter().map(|v| v.ln()).collect());
        }
    }
    let r = spec.delay;
    let mut exponents: Vec<f64> = (0..k)
        .map(|i| logs.iter().map(|l| l[i]).sum::<f64>() / (logs.len() as f64 * r))
        .collect();
    let stderr: Vec<f64> = (0..k)
        .map(|i| block_stderr(&logs.iter().map(|l| l[i] / r).collect::<Vec<_>>(), opts.blocks))
        .collect();
    exponents.sort_by(|a, b| b.total_cmp(a));
    Ok(LyapunovReport {
        exponents,
        stderr,
        iterations: opts.iterations,
        burn_in: opts.burn_in,
        delay: r,
        segments: cocycle.delay_steps(),
        log_diagonals: logs,
        collapsed_from,
    })
}

/// Leading Lyapunov exponents along a single driver covering
/// `[-r, (burn_in + iterations) r]`.
pub fn lyapunov_spectrum(spec: &EquationSpec, drp: &DelayedRoughPath, lin: &Linearization, opts: &LyapunovOptions) -> Result<LyapunovReport, CocycleError> {
    if opts.exponents > MAX_EXPONENTS {
        return Err(CocycleError::TooManyExponents {
            requested: opts.exponents,
            max: MAX_EXPONENTS,
        });
    }
    let k = spec.delay_steps(drp.step()).map_err(SolverError::from)?;
    let dim = SegmentState::flat_len(k + 1, spec.dim, spec.noise_dim);
    let frame = random_frame(dim, opts.exponents.min(dim), opts.frame_seed);
    lyapunov_spectrum_from_frame(spec, drp, lin, frame, opts)
}

/// fBm drivers on `[-r, steps · h]`, lifted with the equation's delay. Path
/// `i` depends only on `(seed, i)`.
pub struct DriverEnsemble {
    sampler: FbmSampler,
    delay_steps: usize,
    seed: u64,
    paths: usize,
}

impl DriverEnsemble {
    pub fn new(hurst: Hurst, dim: usize, step: f64, delay_steps: usize, steps: usize, seed: u64, paths: usize) -> Result<Self, CocycleError> {
        let grid = UniformGrid::new(step, delay_steps, steps)?;
        Ok(DriverEnsemble {
            sampler: FbmSampler::new(grid, hurst, dim)?,
            delay_steps,
            seed,
            paths,
        })
    }

    /// Ensemble sized for `spec` over `[0, horizon]`.
    pub fn for_spec(spec: &EquationSpec, hurst: Hurst, step: f64, horizon: f64, seed: u64, paths: usize) -> Result<Self, CocycleError> {
        let solver = Solver::new(spec, step)?;
        let steps = solver.steps_for(horizon)?;
        DriverEnsemble::new(hurst, spec.noise_dim, step, solver.delay_steps(), steps, seed, paths)
    }

    pub fn len(&self) -> usize {
        self.paths
    }

    pub fn is_empty(&self) -> bool {
        self.paths == 0
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn driver(&self, i: usize) -> Result<DelayedRoughPath, CocycleError> {
        Ok(lift_piecewise_linear(&self.sampler.sample_path(self.seed, i as u64), self.delay_steps)?)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(tag = "status", content = "value", rename_all = "snake_case")]
pub enum PathDecay {
    Slope(f64),
    /// Zero solution; the slope is undefined.
    Degenerate,
    Aborted(String),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecaySummary {
    pub paths: Vec<PathDecay>,
    /// Median over completed, non-degenerate paths.
    pub median: Option<f64>,
    pub aborted: usize,
    pub degenerate: usize,
}

impl DecaySummary {
    pub fn abort_fraction(&self) -> f64 {
        if self.paths.is_empty() {
            0.0
        } else {
            self.aborted as f64 / self.paths.len() as f64
        }
    }

    pub fn slopes(&self) -> Vec<f64> {
        self.paths
            .iter()
            .filter_map(|p| match p {
                PathDecay::Slope(s) => Some(*s),
                _ => None,
            })
            .collect()
    }
}

pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(|a, b| a.total_cmp(b));
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

/// Slope of `log ‖y‖_{∞, [t-r, t]}` on `[T/2, T]` for a single driver.
pub fn path_decay(solver: &Solver, xi: &ControlledSegment, drp: &DelayedRoughPath, steps: usize) -> PathDecay {
    match solver.run(xi, drp, steps, &SolverOptions::quiet()) {
        Ok(sol) => match log_sup_slope(sol.values(), sol.delay_steps(), sol.step()) {
            Some(s) => PathDecay::Slope(s),
            None => PathDecay::Degenerate,
        },
        Err(e @ SolverError::Overflow { .. }) => PathDecay::Aborted(e.to_string()),
        Err(e) => PathDecay::Aborted(e.to_string()),
    }
}

/// Per-path decay slopes over `[T/2, T]` and their median.
pub fn pathwise_decay_estimate(spec: &EquationSpec, xi: &ControlledSegment, ensemble: &DriverEnsemble, horizon: f64) -> Result<DecaySummary, CocycleError> {
    if horizon < 20.0 * spec.delay * (1.0 - 1e-12) {
        return Err(CocycleError::HorizonTooShort {
            horizon,
            min: 20.0 * spec.delay,
        });
    }
    let step = ensemble.sampler.grid().step();
    let solver = Solver::new(spec, step)?;
    let steps = solver.steps_for(horizon)?;
    let paths: Vec<PathDecay> = (0..ensemble.len())
        .into_par_iter()
        .map(|i| match ensemble.driver(i) {
            Ok(drp) => path_decay(&solver, xi, &drp, steps),
            Err(e) => PathDecay::Aborted(e.to_string()),
        })
        .collect();
    let aborted = paths.iter().filter(|p| matches!(p, PathDecay::Aborted(_))).count();
    let degenerate = paths.iter().filter(|p| matches!(p, PathDecay::Degenerate)).count();
    if aborted == paths.len() && !paths.is_empty() {
        return Err(CocycleError::AllAborted);
    }
    let mut summary = DecaySummary {
        paths,
        median: None,
        aborted,
        degenerate,
    };
    summary.median = median(&summary.slopes());
    Ok(summary)
}
