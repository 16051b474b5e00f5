//! One-step scheme for `dy = A(y_t, ∫ y_{t+θ} π(dθ)) dt + G(y_t, y_{t-r}) d𝐗_t`.
//!
//! On each cell `[t_j, t_{j+1}]` the rough part is the compensated germ
//! `G(y_j, y_{j-k}) X + ζ⁰_j 𝕏 + ζ¹_j 𝕏(-r)` with
//! `ζ⁰ = ∂ₓG · y'_j`, `ζ¹ = ∂_yG · y'_{j-k}`, and the drift is integrated by
//! Heun's rule (predictor `y* = y_j + h A_j + rough`). The Gubinelli
//! derivative of the solution is `y'_j = G(y_j, y_{j-k})` for `j >= 0` and
//! comes from the initial segment for `j < 0`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::controlled::{ControlledSegment, DerivativeTensor, SegmentError};
use crate::equation::{DiscreteMeasure, EquationError, EquationSpec};
use crate::lift::{DelayedRoughPath, LiftError};

#[derive(Debug, Error, PartialEq)]
pub enum SolverError {
    #[error(transparent)]
    Equation(#[from] EquationError),
    #[error("driver delay is {driver} steps, equation needs {equation}")]
    DelayMismatch { driver: usize, equation: usize },
    #[error("initial segment must cover [-r, 0] with {expected} nodes starting at {start}, got start {got_start} and {got_len} nodes")]
    InitialWindow {
        expected: usize,
        start: isize,
        got_start: isize,
        got_len: usize,
    },
    #[error("horizon {0} is not a non-negative multiple of the step")]
    HorizonMisaligned(f64),
    #[error("driver covers [{available_from}, {available_to}] steps, solve needs [{need_from}, {need_to}]")]
    HistoryGap {
        need_from: isize,
        need_to: isize,
        available_from: isize,
        available_to: isize,
    },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("numeric overflow in segment {segment} at t = {time}")]
    Overflow { segment: usize, node: usize, time: f64 },
    #[error(transparent)]
    Segment(#[from] SegmentError),
    #[error(transparent)]
    Lift(#[from] LiftError),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Record per-segment controlled and driver norms.
    pub monitor: bool,
    /// Exponent of the controlled norm in the monitor.
    pub beta: f64,
    /// Exponent of the driver norm in the monitor.
    pub gamma: f64,
    /// Abort once `|y|` exceeds this.
    pub overflow: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            monitor: true,
            beta: 0.35,
            gamma: 0.35,
            overflow: 1e12,
        }
    }
}

impl SolverOptions {
    pub fn quiet() -> Self {
        SolverOptions {
            monitor: false,
            ..SolverOptions::default()
        }
    }
}

/// Norms of one `r`-segment `[(p-1) r, p r]`; `index = 0` is the initial
/// segment.
#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct SegmentNorm {
    pub index: usize,
    pub start_time: f64,
    pub controlled_norm: f64,
    pub driver_norm: f64,
}

/// Solution on `[-r, T]`, nodes `-k..=N` relative to time zero.
#[derive(Clone, Debug, PartialEq)]
pub struct SolutionPath {
    step: f64,
    delay_steps: usize,
    initial: ControlledSegment,
    values: Vec<DVector<f64>>,
    derivs: Vec<DMatrix<f64>>,
    norm_log: Vec<SegmentNorm>,
}

impl SolutionPath {
    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    /// Number of steps after time zero.
    pub fn steps(&self) -> usize {
        self.values.len() - 1 - self.delay_steps
    }

    pub fn horizon(&self) -> f64 {
        self.steps() as f64 * self.step
    }

    pub fn initial(&self) -> &ControlledSegment {
        &self.initial
    }

    /// Value at node `rel` in `-k..=N`.
    pub fn value(&self, rel: isize) -> &DVector<f64> {
        &self.values[(rel + self.delay_steps as isize) as usize]
    }

    pub fn deriv(&self, rel: isize) -> &DMatrix<f64> {
        &self.derivs[(rel + self.delay_steps as isize) as usize]
    }

    pub fn final_value(&self) -> &DVector<f64> {
        self.values.last().expect("non-empty")
    }

    /// All values from `-r` to `T`.
    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn derivs(&self) -> &[DMatrix<f64>] {
        &self.derivs
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let k = self.delay_steps as isize;
        (0..self.values.len()).map(move |i| (i as isize - k) as f64 * self.step)
    }

    /// The whole path as a controlled segment starting at `-k`.
    pub fn to_controlled(&self) -> ControlledSegment {
        ControlledSegment::new(-(self.delay_steps as isize), self.values.clone(), self.derivs.clone())
            .expect("consistent by construction")
    }

    /// Window `[end - k, end]` (nodes relative to zero) as a controlled
    /// segment on `[-r, 0]`. `end = 0` returns the initial data unchanged.
    pub fn window_ending_at(&self, end: usize) -> ControlledSegment {
        if end == 0 {
            return self.initial.clone();
        }
        let k = self.delay_steps;
        ControlledSegment::new(
            -(k as isize),
            self.values[end..=end + k].to_vec(),
            self.derivs[end..=end + k].to_vec(),
        )
        .expect("consistent by construction")
    }

    /// `m`-th segment `[(m-1) r, m r]` rebased onto `[-r, 0]`.
    pub fn segment(&self, m: usize) -> ControlledSegment {
        self.window_ending_at(m * self.delay_steps)
    }

    /// `sup |y|` over nodes `from..=to` (relative to zero).
    pub fn sup_norm(&self, from: isize, to: isize) -> f64 {
        (from..=to).map(|j| self.value(j).norm()).fold(0.0, f64::max)
    }

    pub fn norm_log(&self) -> &[SegmentNorm] {
        &self.norm_log
    }
}

/// Per-segment `(‖y‖ controlled, ‖𝐗‖)` table.
pub fn apriori_norm_report(solution: &SolutionPath) -> Vec<SegmentNorm> {
    solution.norm_log.clone()
}

/// Precomputed stepping data for one equation and step size.
#[derive(Clone, Debug)]
pub struct Solver {
    spec: EquationSpec,
    step: f64,
    delay_steps: usize,
    weights: DiscreteMeasure,
}

fn drift_input<'a>(weights: &DiscreteMeasure, n: usize, at: impl Fn(usize) -> &'a DVector<f64>) -> DVector<f64> {
    weights.apply(n, at)
}

impl Solver {
    pub fn new(spec: &EquationSpec, step: f64) -> Result<Self, SolverError> {
        let delay_steps = spec.delay_steps(step)?;
        let weights = spec.measure.discretize(spec.dim, step, spec.delay)?;
        Ok(Solver {
            spec: spec.clone(),
            step,
            delay_steps,
            weights,
        })
    }

    pub fn spec(&self) -> &EquationSpec {
        &self.spec
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    /// Steps for a grid-aligned horizon.
    pub fn steps_for(&self, horizon: f64) -> Result<usize, SolverError> {
        let k = horizon / self.step;
        let r = k.round();
        if !(horizon >= 0.0) || (k - r).abs() > 1e-9 * k.max(1.0) {
            return Err(SolverError::HorizonMisaligned(horizon));
        }
        Ok(r as usize)
    }

    fn check(&self, xi: &ControlledSegment, drp: &DelayedRoughPath, steps: usize) -> Result<usize, SolverError> {
        let k = self.delay_steps;
        if drp.delay_steps() != k || (drp.step() - self.step).abs() > 1e-12 * self.step {
            return Err(SolverError::DelayMismatch {
                driver: drp.delay_steps(),
                equation: k,
            });
        }
        if xi.start() != -(k as isize) || xi.len() != k + 1 {
            return Err(SolverError::InitialWindow {
                expected: k + 1,
                start: -(k as isize),
                got_start: xi.start(),
                got_len: xi.len(),
            });
        }
        if xi.state_dim() != self.spec.dim || xi.noise_dim() != self.spec.noise_dim || drp.dim() != self.spec.noise_dim {
            return Err(SolverError::Dimension(format!(
                "equation is {}x{}, initial data {}x{}, driver {}",
                self.spec.dim,
                self.spec.noise_dim,
                xi.state_dim(),
                xi.noise_dim(),
                drp.dim()
            )));
        }
        let origin = drp.origin();
        if origin < k || drp.steps_after_origin() < steps {
            return Err(SolverError::HistoryGap {
                need_from: -(k as isize),
                need_to: steps as isize,
                available_from: -(origin as isize),
                available_to: drp.steps_after_origin() as isize,
            });
        }
        Ok(origin)
    }

    /// Solve on `[0, steps · h]` from the initial segment `xi` on `[-r, 0]`.
    pub fn run(&self, xi: &ControlledSegment, drp: &DelayedRoughPath, steps: usize, opts: &SolverOptions) -> Result<SolutionPath, SolverError> {
        let origin = self.check(xi, drp, steps)?;
        let k = self.delay_steps;
        let n = self.spec.dim;
        let h = self.step;
        let g = self.spec.diffusion.as_ref();
        let rough = !g.is_zero();
        let drift = &self.spec.drift;

        let mut y: Vec<DVector<f64>> = Vec::with_capacity(k + steps + 1);
        let mut dv: Vec<DMatrix<f64>> = Vec::with_capacity(k + steps + 1);
        y.extend_from_slice(xi.values());
        dv.extend_from_slice(&xi.derivs()[..k]);
        dv.push(if rough {
            g.eval(&y[k], &y[0])
        } else {
            DMatrix::zeros(n, self.spec.noise_dim)
        });

        for j in 0..steps {
            let cur = j + k;
            let cell = origin + j;
            let a0 = drift.apply(&y[cur], &drift_input(&self.weights, n, |l| &y[cur - l]));
            let mut incr = DVector::zeros(n);
            if rough {
                let (px, py) = g.partials(&y[cur], &y[j]);
                let z0 = DerivativeTensor::compose(&px, &dv[cur]);
                let z1 = DerivativeTensor::compose(&py, &dv[j]);
                incr += &dv[cur] * drp.cell_increment(cell);
                incr += z0.apply_area(drp.cell_area(cell));
                incr += z1.apply_area(drp.cell_delayed_area(cell).expect("history checked"));
            }
            let ystar = &y[cur] + &a0 * h + &incr;
            let mstar = drift_input(&self.weights, n, |l| if l == 0 { &ystar } else { &y[cur + 1 - l] });
            let a1 = drift.apply(&ystar, &mstar);
            let next = &y[cur] + (a0 + a1) * (0.5 * h) + incr;
            let size = next.norm();
            if !size.is_finite() || size > opts.overflow {
                return Err(SolverError::Overflow {
                    segment: j / k + 1,
                    node: j + 1,
                    time: (j + 1) as f64 * h,
                });
            }
            dv.push(if rough {
                g.eval(&next, &y[j + 1])
            } else {
                DMatrix::zeros(n, self.spec.noise_dim)
            });
            y.push(next);
        }

        let mut path = SolutionPath {
            step: h,
            delay_steps: k,
            initial: xi.clone(),
            values: y,
            derivs: dv,
            norm_log: Vec::new(),
        };
        if opts.monitor {
            path.norm_log = monitor(&path, drp, opts)?;
        }
        Ok(path)
    }

    /// Tangent of [`Solver::run`] at `base` in the direction of the initial
    /// perturbation `direction` (values and Gubinelli derivatives on
    /// `[-r, 0]`).
    pub fn tangent(&self, base: &SolutionPath, drp: &DelayedRoughPath, direction: &ControlledSegment) -> Result<SolutionPath, SolverError> {
        let steps = base.steps();
        let origin = self.check(direction, drp, steps)?;
        let k = self.delay_steps;
        let n = self.spec.dim;
        let d = self.spec.noise_dim;
        let h = self.step;
        let g = self.spec.diffusion.as_ref();
        let rough = !g.is_zero();
        let drift = &self.spec.drift;
        let y = base.values();
        let yd = base.derivs();

        let mut v: Vec<DVector<f64>> = Vec::with_capacity(k + steps + 1);
        let mut vd: Vec<DMatrix<f64>> = Vec::with_capacity(k + steps + 1);
        v.extend_from_slice(direction.values());
        vd.extend_from_slice(&direction.derivs()[..k]);
        let dg = |cur: usize, past: usize, v: &[DVector<f64>]| -> DMatrix<f64> {
            let (px, py) = g.partials(&y[cur], &y[past]);
            let mut out = DMatrix::zeros(n, d);
            for e in 0..n {
                out += &px[e] * v[cur][e] + &py[e] * v[past][e];
            }
            out
        };
        vd.push(if rough { dg(k, 0, &v) } else { DMatrix::zeros(n, d) });

        for j in 0..steps {
            let cur = j + k;
            let cell = origin + j;
            let a0 = drift.apply(&v[cur], &drift_input(&self.weights, n, |l| &v[cur - l]));
            let mut incr = DVector::zeros(n);
            if rough {
                let (px, py) = g.partials(&y[cur], &y[j]);
                let (qx, qy) = g.second_directional(&y[cur], &y[j], &v[cur], &v[j]);
                let mut z0 = DerivativeTensor::compose(&qx, &yd[cur]);
                z0.add_assign(&DerivativeTensor::compose(&px, &vd[cur]));
                let mut z1 = DerivativeTensor::compose(&qy, &yd[j]);
                z1.add_assign(&DerivativeTensor::compose(&py, &vd[j]));
                incr += &vd[cur] * drp.cell_increment(cell);
                incr += z0.apply_area(drp.cell_area(cell));
                incr += z1.apply_area(drp.cell_delayed_area(cell).expect("history checked"));
            }
            let vstar = &v[cur] + &a0 * h + &incr;
            let mstar = drift_input(&self.weights, n, |l| if l == 0 { &vstar } else { &v[cur + 1 - l] });
            let a1 = drift.apply(&vstar, &mstar);
            let next = &v[cur] + (a0 + a1) * (0.5 * h) + incr;
            v.push(next);
            vd.push(if rough { dg(cur + 1, j + 1, &v) } else { DMatrix::zeros(n, d) });
        }
        Ok(SolutionPath {
            step: h,
            delay_steps: k,
            initial: direction.clone(),
            values: v,
            derivs: vd,
            norm_log: Vec::new(),
        })
    }
}

fn monitor(path: &SolutionPath, drp: &DelayedRoughPath, opts: &SolverOptions) -> Result<Vec<SegmentNorm>, SolverError> {
    let k = path.delay_steps;
    let segments = path.steps().div_ceil(k);
    let mut out = Vec::with_capacity(segments + 1);
    for p in 0..=segments {
        let end = (p * k).min(path.steps());
        let from = end as isize - k as isize;
        let seg = if p == 0 {
            path.initial.clone()
        } else {
            let lo = (from + k as isize) as usize;
            ControlledSegment::new(from, path.values[lo..=end + k].to_vec(), path.derivs[lo..=end + k].to_vec())?
        };
        let seg = seg.rebased(from);
        let controlled = seg.controlled_norm(opts.beta, drp)?;
        let a = drp.node(from).expect("checked");
        let b = drp.node(end as isize).expect("checked");
        let driver = drp.window_norms(a, b, opts.gamma)?.total;
        out.push(SegmentNorm {
            index: p,
            start_time: from as f64 * path.step,
            controlled_norm: controlled,
            driver_norm: driver,
        });
    }
    Ok(out)
}

/// Solve on `[0, horizon]` with default options.
pub fn solve(spec: &EquationSpec, xi: &ControlledSegment, drp: &DelayedRoughPath, horizon: f64) -> Result<SolutionPath, SolverError> {
    solve_with(spec, xi, drp, horizon, &SolverOptions::default())
}

pub fn solve_with(
    spec: &EquationSpec,
    xi: &ControlledSegment,
    drp: &DelayedRoughPath,
    horizon: f64,
    opts: &SolverOptions,
) -> Result<SolutionPath, SolverError> {
    let solver = Solver::new(spec, drp.step())?;
    let steps = solver.steps_for(horizon)?;
    solver.run(xi, drp, steps, opts)
}

/// Solution of the variational equation along `solve(spec, xi, ...)` with
/// initial perturbation `direction`.
pub fn directional_derivative(
    spec: &EquationSpec,
    xi: &ControlledSegment,
    drp: &DelayedRoughPath,
    horizon: f64,
    direction: &ControlledSegment,
) -> Result<SolutionPath, SolverError> {
    let solver = Solver::new(spec, drp.step())?;
    let steps = solver.steps_for(horizon)?;
    let base = solver.run(xi, drp, steps, &SolverOptions::quiet())?;
    solver.tangent(&base, drp, direction)
}

/// Constant initial segment `ξ ≡ value` on `[-r, 0]` with zero derivative.
pub fn constant_history(value: DVector<f64>, delay_steps: usize, noise_dim: usize) -> ControlledSegment {
    ControlledSegment::constant(-(delay_steps as isize), delay_steps + 1, value, noise_dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diffusion::{BuiltinDiffusion, Profile, SeparableDiffusion, SmoothMap};
    use crate::equation::{LinearDrift, SignedDelayMeasure};
    use crate::fbm::{FbmSampler, Hurst, SampledPath, UniformGrid};
    use crate::lift::lift_piecewise_linear;
    use std::sync::Arc;

    fn zero_driver(h: f64, left: usize, right: usize, k: usize) -> DelayedRoughPath {
        let grid = UniformGrid::new(h, left, right).unwrap();
        lift_piecewise_linear(&SampledPath::from_fn(grid, 1, |_| vec![0.0]).unwrap(), k).unwrap()
    }

    fn fbm_driver(d: usize, h: f64, left: usize, right: usize, k: usize, seed: u64) -> DelayedRoughPath {
        let grid = UniformGrid::new(h, left, right).unwrap();
        let p = FbmSampler::new(grid, Hurst::new(0.4).unwrap(), d).unwrap().sample_path(seed, 0);
        lift_piecewise_linear(&p, k).unwrap()
    }

    #[test]
    fn scalar_ode_decays_exponentially() {
        let spec = EquationSpec::scalar_deterministic(-1.0, 0.0, SignedDelayMeasure::none(), 0.1).unwrap();
        let drp = zero_driver(1e-3, 100, 1000, 100);
        let xi = constant_history(DVector::from_element(1, 1.5), 100, 1);
        let sol = solve(&spec, &xi, &drp, 1.0).unwrap();
        for j in (0..=1000).step_by(50) {
            let t = j as f64 * 1e-3;
            assert!((sol.value(j)[0] - 1.5 * (-t).exp()).abs() < 1e-6);
        }
    }

    #[test]
    fn pure_delay_drift_method_of_steps() {
        let spec = EquationSpec::scalar_dde(0.0, 1.0, 1.0).unwrap();
        let drp = zero_driver(1e-3, 1000, 2000, 1000);
        let xi = constant_history(DVector::from_element(1, 1.0), 1000, 1);
        let sol = solve(&spec, &xi, &drp, 2.0).unwrap();
        assert!((sol.value(1000)[0] - 2.0).abs() < 1e-4);
        assert!((sol.value(2000)[0] - 3.5).abs() < 1e-4);
    }

    #[test]
    fn additive_noise_is_exact() {
        let spec = EquationSpec::new(
            LinearDrift::zero(2),
            SignedDelayMeasure::none(),
            Arc::new(SeparableDiffusion::additive_identity(2)),
            0.25,
        )
        .unwrap();
        let drp = fbm_driver(2, 1.0 / 64.0, 16, 128, 16, 9);
        let xi = constant_history(DVector::from_vec(vec![0.3, -1.0]), 16, 2);
        let sol = solve(&spec, &xi, &drp, 2.0).unwrap();
        for j in 0..=128 {
            let expect = xi.values()[16].clone() + drp.value(drp.node(j).unwrap());
            assert!((sol.value(j) - expect).norm() < 1e-13);
            assert_eq!(sol.deriv(j), &DMatrix::identity(2, 2));
        }
    }

    #[test]
    fn restart_from_segment_is_bit_identical() {
        let g = BuiltinDiffusion {
            profile: Profile::Tanh,
            current: vec![0.4],
            delayed: vec![0.2],
            constant: vec![0.1],
        }
        .bind(1, 1)
        .unwrap();
        let spec = EquationSpec::new(LinearDrift::scalar(-0.5, 0.3), SignedDelayMeasure::dirac(-0.5), Arc::new(g), 0.5).unwrap();
        let drp = fbm_driver(1, 0.01, 50, 200, 50, 3);
        let xi = constant_history(DVector::from_element(1, 0.8), 50, 1);
        let full = solve_with(&spec, &xi, &drp, 2.0, &SolverOptions::quiet()).unwrap();
        let first = solve_with(&spec, &xi, &drp, 0.5, &SolverOptions::quiet()).unwrap();
        let restart = solve_with(&spec, &first.segment(1), &drp.shift(50).unwrap(), 1.5, &SolverOptions::quiet()).unwrap();
        for j in 0..=150 {
            assert_eq!(restart.value(j), full.value(j + 50));
            assert_eq!(restart.deriv(j), full.deriv(j + 50));
        }
        // determinism
        assert_eq!(full, solve_with(&spec, &xi, &drp, 2.0, &SolverOptions::quiet()).unwrap());
    }

    #[test]
    fn gubinelli_derivative_is_diffusion() {
        let g = BuiltinDiffusion {
            profile: Profile::Tanh,
            current: vec![0.4, 0.1],
            delayed: vec![0.2, -0.3],
            constant: vec![],
        }
        .bind(1, 2)
        .unwrap();
        let spec = EquationSpec::new(LinearDrift::scalar(-0.5, 0.0), SignedDelayMeasure::none(), Arc::new(g.clone()), 0.2).unwrap();
        let drp = fbm_driver(2, 0.01, 20, 60, 20, 4);
        let xi = constant_history(DVector::from_element(1, 0.5), 20, 2);
        let sol = solve(&spec, &xi, &drp, 0.6).unwrap();
        for j in 0..=60isize {
            assert_eq!(sol.deriv(j), &g.eval(sol.value(j), sol.value(j - 20)));
        }
        assert_eq!(sol.norm_log().len(), 4);
    }

    #[test]
    fn zero_direction_gives_zero_tangent() {
        let g = BuiltinDiffusion {
            profile: Profile::Tanh,
            current: vec![0.4],
            ..BuiltinDiffusion::zero()
        }
        .bind(1, 1)
        .unwrap();
        let spec = EquationSpec::new(LinearDrift::scalar(-0.5, 0.3), SignedDelayMeasure::dirac(-0.2), Arc::new(g), 0.2).unwrap();
        let drp = fbm_driver(1, 0.01, 20, 40, 20, 5);
        let xi = constant_history(DVector::from_element(1, 0.8), 20, 1);
        let zero = constant_history(DVector::zeros(1), 20, 1);
        let v = directional_derivative(&spec, &xi, &drp, 0.4, &zero).unwrap();
        assert!(v.values().iter().all(|x| x.norm() == 0.0));
    }

    #[test]
    fn tangent_of_linear_equation_is_the_solution() {
        let g = BuiltinDiffusion {
            profile: Profile::Linear,
            current: vec![0.3, 0.1, -0.2, 0.2],
            delayed: vec![0.1, 0.0, 0.05, -0.1],
            constant: vec![],
        }
        .bind(1, 4)
        .unwrap();
        let spec = EquationSpec::new(LinearDrift::scalar(-0.4, 0.6), SignedDelayMeasure::dirac(-0.3), Arc::new(g), 0.3)
            .unwrap();
        let drp = fbm_driver(4, 0.01, 30, 90, 30, 6);
        let xi = ControlledSegment::new(
            -30,
            (0..=30).map(|i| DVector::from_element(1, (i as f64 * 0.1).cos())).collect(),
            (0..=30).map(|i| DMatrix::from_element(1, 4, i as f64 * 0.01)).collect(),
        )
        .unwrap();
        let sol = solve(&spec, &xi, &drp, 0.9).unwrap();
        let tan = directional_derivative(&spec, &xi, &drp, 0.9, &xi).unwrap();
        for j in 0..=90 {
            assert!((sol.value(j) - tan.value(j)).norm() < 1e-12 * (1.0 + sol.value(j).norm()));
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let spec = EquationSpec::scalar_dde(0.0, -1.0, 0.1).unwrap();
        let drp = zero_driver(0.01, 10, 50, 10);
        let xi = constant_history(DVector::from_element(1, 1.0), 10, 1);
        assert!(matches!(solve(&spec, &xi, &drp, 0.505), Err(SolverError::HorizonMisaligned(_))));
        assert!(matches!(solve(&spec, &xi, &drp, 1.0), Err(SolverError::HistoryGap { .. })));
        let short = constant_history(DVector::from_element(1, 1.0), 9, 1);
        assert!(matches!(solve(&spec, &short, &drp, 0.2), Err(SolverError::InitialWindow { .. })));
        let other = zero_driver(0.01, 20, 50, 20);
        assert!(matches!(solve(&spec, &xi, &other, 0.2), Err(SolverError::DelayMismatch { .. })));
    }

    #[test]
    fn overflow_reports_segment() {
        let spec = EquationSpec::scalar_deterministic(50.0, 0.0, SignedDelayMeasure::none(), 0.1).unwrap();
        let drp = zero_driver(0.01, 10, 1000, 10);
        let xi = constant_history(DVector::from_element(1, 1.0), 10, 1);
        match solve(&spec, &xi, &drp, 10.0) {
            Err(SolverError::Overflow { segment, .. }) => assert!(segment > 1),
            other => panic!("{other:?}"),
        }
    }
}
