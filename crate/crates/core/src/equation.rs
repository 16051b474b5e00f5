//! Equation data: linear drift `A(x, z) = A₀x + A₁z`, the delay measure `π`
//! on `[-r, 0]`, and the diffusion `G`.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diffusion::{BuiltinDiffusion, DiffusionError, SeparableDiffusion, SmoothMap};

const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum EquationError {
    #[error("delay must be positive, got {0}")]
    NonPositiveDelay(f64),
    #[error("delay {delay} is shorter than the step {step}")]
    DelayBelowStep { delay: f64, step: f64 },
    #[error("{what} = {value} is not a multiple of the step {step}")]
    Misaligned { what: &'static str, value: f64, step: f64 },
    #[error("measure support point {0} lies outside [-r, 0]")]
    OutsideSupport(f64),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("history covers {got} nodes, {need} required")]
    Coverage { got: usize, need: usize },
    #[error(transparent)]
    Diffusion(#[from] DiffusionError),
}

/// `A(x, z) = current · x + memory · z`.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearDrift {
    pub current: DMatrix<f64>,
    pub memory: DMatrix<f64>,
}

impl LinearDrift {
    pub fn new(current: DMatrix<f64>, memory: DMatrix<f64>) -> Self {
        LinearDrift { current, memory }
    }

    pub fn zero(n: usize) -> Self {
        LinearDrift::new(DMatrix::zeros(n, n), DMatrix::zeros(n, n))
    }

    pub fn scalar(a: f64, b: f64) -> Self {
        LinearDrift::new(DMatrix::from_element(1, 1, a), DMatrix::from_element(1, 1, b))
    }

    pub fn apply(&self, x: &DVector<f64>, z: &DVector<f64>) -> DVector<f64> {
        &self.current * x + &self.memory * z
    }

    /// Spectral norms `(‖A₀‖, ‖A₁‖)`.
    pub fn block_norms(&self) -> (f64, f64) {
        (op_norm(&self.current), op_norm(&self.memory))
    }
}

pub(crate) fn op_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        0.0
    } else {
        m.singular_values().max()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DelayAtom {
    pub location: f64,
    pub weight: DMatrix<f64>,
}

/// Constant matrix density on `[from, to] ⊂ [-r, 0]`.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityPiece {
    pub from: f64,
    pub to: f64,
    pub weight: DMatrix<f64>,
}

/// Matrix-valued finite signed measure on `[-r, 0]`.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SignedDelayMeasure {
    pub atoms: Vec<DelayAtom>,
    pub density: Vec<DensityPiece>,
}

/// Weights of `π` on the grid: `∫ y_{t+θ} π(dθ) ≈ Σ W_j y_{t - j h}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure {
    pub lags: Vec<(usize, DMatrix<f64>)>,
    pub delay_steps: usize,
}

impl DiscreteMeasure {
    /// `values` holds `y` at lags `0..=delay_steps` through `at(j) = y_{t - jh}`.
    pub fn apply<'a>(&self, n: usize, at: impl Fn(usize) -> &'a DVector<f64>) -> DVector<f64> {
        let mut out = DVector::zeros(n);
        for (lag, w) in &self.lags {
            out.gemv(1.0, w, at(*lag), 1.0);
        }
        out
    }

    /// Total weight `Σ W_j`, equal to `π([-r, 0])` up to quadrature.
    pub fn total(&self, n: usize) -> DMatrix<f64> {
        self.lags.iter().fold(DMatrix::zeros(n, n), |acc, (_, w)| acc + w)
    }
}

fn lag_of(theta: f64, step: f64, what: &'static str) -> Result<usize, EquationError> {
    let k = -theta / step;
    let r = k.round();
    if (k - r).abs() > ALIGN_TOL * k.abs().max(1.0) {
        return Err(EquationError::Misaligned {
            what,
            value: theta,
            step,
        });
    }
    Ok(r as usize)
}

impl SignedDelayMeasure {
    pub fn none() -> Self {
        SignedDelayMeasure::default()
    }

    pub fn atom(location: f64, weight: DMatrix<f64>) -> Self {
        SignedDelayMeasure {
            atoms: vec![DelayAtom { location, weight }],
            density: vec![],
        }
    }

    /// Scalar Dirac mass at `location`.
    pub fn dirac(location: f64) -> Self {
        SignedDelayMeasure::atom(location, DMatrix::identity(1, 1))
    }

    pub fn uniform(from: f64, to: f64, weight: DMatrix<f64>) -> Self {
        SignedDelayMeasure {
            atoms: vec![],
            density: vec![DensityPiece { from, to, weight }],
        }
    }

    pub fn validate(&self, n: usize, delay: f64) -> Result<(), EquationError> {
        let inside = |t: f64| t <= ALIGN_TOL * delay && t >= -delay * (1.0 + ALIGN_TOL);
        for a in &self.atoms {
            if !inside(a.location) {
                return Err(EquationError::OutsideSupport(a.location));
            }
            if a.weight.shape() != (n, n) {
                return Err(EquationError::Dimension(format!("atom weight is {:?}", a.weight.shape())));
            }
        }
        for p in &self.density {
            for t in [p.from, p.to] {
                if !inside(t) {
                    return Err(EquationError::OutsideSupport(t));
                }
            }
            if p.from > p.to {
                return Err(EquationError::Dimension(format!("density piece [{}, {}] is reversed", p.from, p.to)));
            }
            if p.weight.shape() != (n, n) {
                return Err(EquationError::Dimension(format!("density weight is {:?}", p.weight.shape())));
            }
        }
        Ok(())
    }

    /// Total variation of the entries, `Σ |W_atom| + Σ |W_piece| · length`.
    pub fn total_variation(&self) -> f64 {
        self.atoms.iter().map(|a| op_norm(&a.weight)).sum::<f64>()
            + self.density.iter().map(|p| op_norm(&p.weight) * (p.to - p.from)).sum::<f64>()
    }

    /// Atoms evaluated at their nodes, density pieces by the trapezoid rule.
    pub fn discretize(&self, n: usize, step: f64, delay: f64) -> Result<DiscreteMeasure, EquationError> {
        self.validate(n, delay)?;
        let delay_steps = lag_of(-delay, step, "delay")?;
        let mut lags: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); delay_steps + 1];
        let mut used = vec![false; delay_steps + 1];
        for a in &self.atoms {
            let j = lag_of(a.location, step, "atom location")?.min(delay_steps);
            lags[j] += &a.weight;
            used[j] = true;
        }
        for p in &self.density {
            let lo = lag_of(p.to, step, "density bound")?.min(delay_steps);
            let hi = lag_of(p.from, step, "density bound")?.min(delay_steps);
            for j in lo..hi {
                lags[j] += &p.weight * (0.5 * step);
                lags[j + 1] += &p.weight * (0.5 * step);
                used[j] = true;
                used[j + 1] = true;
            }
        }
        Ok(DiscreteMeasure {
            lags: lags
                .into_iter()
                .enumerate()
                .filter(|(j, _)| used[*j])
                .collect(),
            delay_steps,
        })
    }

    /// `∫ e^{zθ} π(dθ)`, exact for both atoms and constant density pieces.
    pub fn laplace(&self, n: usize, z: Complex64) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for a in &self.atoms {
            let e = (z * a.location).exp();
            out += a.weight.map(|w| Complex64::from(w) * e);
        }
        for p in &self.density {
            let f = exp_integral(z, p.from, p.to);
            out += p.weight.map(|w| Complex64::from(w) * f);
        }
        out
    }

    /// Derivative of [`SignedDelayMeasure::laplace`] in `z`: `∫ θ e^{zθ} π(dθ)`.
    pub fn laplace_derivative(&self, n: usize, z: Complex64) -> DMatrix<Complex64> {
        let mut out = DMatrix::<Complex64>::zeros(n, n);
        for a in &self.atoms {
            let e = (z * a.location).exp() * a.location;
            out += a.weight.map(|w| Complex64::from(w) * e);
        }
        for p in &self.density {
            let f = theta_exp_integral(z, p.from, p.to);
            out += p.weight.map(|w| Complex64::from(w) * f);
        }
        out
    }
}

/// `∫_a^b e^{zθ} dθ`.
fn exp_integral(z: Complex64, a: f64, b: f64) -> Complex64 {
    let len = b - a;
    if (z * len).norm() < 1e-3 {
        // e^{za} Σ_k (z len)^k len / (k+1)!
        let w = z * len;
        let mut term = Complex64::from(len);
        let mut sum = term;
        for k in 1..8 {
            term *= w / (k as f64 + 1.0);
            sum += term;
        }
        (z * a).exp() * sum
    } else {
        ((z * b).exp() - (z * a).exp()) / z
    }
}

/// `∫_a^b θ e^{zθ} dθ`.
fn theta_exp_integral(z: Complex64, a: f64, b: f64) -> Complex64 {
    let len = b - a;
    if (z * len).norm() < 1e-3 {
        // Simpson with many panels is ample for a near-polynomial integrand.
        let m = 64;
        let hstep = len / m as f64;
        (0..=m)
            .map(|i| {
                let t = a + i as f64 * hstep;
                let w = if i == 0 || i == m { 1.0 } else if i % 2 == 1 { 4.0 } else { 2.0 };
                (z * t).exp() * t * w
            })
            .sum::<Complex64>()
            * (hstep / 3.0)
    } else {
        let f = |t: f64| (z * t).exp() * (Complex64::from(t) / z - Complex64::from(1.0) / (z * z));
        f(b) - f(a)
    }
}

/// `∫_{-r}^0 y_{t+θ} π(dθ)` from history values `y_{t-r}, ..., y_t` (oldest
/// first).
pub fn measure_integral(
    values: &[DVector<f64>],
    measure: &SignedDelayMeasure,
    step: f64,
    delay: f64,
) -> Result<DVector<f64>, EquationError> {
    let n = values.first().map_or(0, |v| v.len());
    let disc = measure.discretize(n, step, delay)?;
    if values.len() != disc.delay_steps + 1 {
        return Err(EquationError::Coverage {
            got: values.len(),
            need: disc.delay_steps + 1,
        });
    }
    let last = values.len() - 1;
    Ok(disc.apply(n, |j| &values[last - j]))
}

/// The tuple `(A, π, G, r)` of a delay equation with state dimension `n` and
/// driver dimension `d`.
#[derive(Clone)]
pub struct EquationSpec {
    pub dim: usize,
    pub noise_dim: usize,
    pub delay: f64,
    pub drift: LinearDrift,
    pub measure: SignedDelayMeasure,
    pub diffusion: Arc<dyn SmoothMap>,
}

impl fmt::Debug for EquationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("EquationSpec")
            .field("dim", &self.dim)
            .field("noise_dim", &self.noise_dim)
            .field("delay", &self.delay)
            .field("drift", &self.drift)
            .field("measure", &self.measure)
            .finish_non_exhaustive()
    }
}

impl EquationSpec {
    pub fn new(
        drift: LinearDrift,
        measure: SignedDelayMeasure,
        diffusion: Arc<dyn SmoothMap>,
        delay: f64,
    ) -> Result<Self, EquationError> {
        let dim = drift.current.nrows();
        if !(delay > 0.0) {
            return Err(EquationError::NonPositiveDelay(delay));
        }
        if drift.current.shape() != (dim, dim) || drift.memory.shape() != (dim, dim) {
            return Err(EquationError::Dimension("drift blocks must be square and equal".into()));
        }
        if diffusion.state_dim() != dim {
            return Err(EquationError::Dimension(format!(
                "diffusion acts on dimension {}, drift on {dim}",
                diffusion.state_dim()
            )));
        }
        measure.validate(dim, delay)?;
        Ok(EquationSpec {
            dim,
            noise_dim: diffusion.noise_dim(),
            delay,
            drift,
            measure,
            diffusion,
        })
    }

    /// `ẏ = a y_t + b ∫ y_{t+θ} π(dθ)` with scalar data and `G ≡ 0`, `d = 1`.
    pub fn scalar_deterministic(a: f64, b: f64, measure: SignedDelayMeasure, delay: f64) -> Result<Self, EquationError> {
        EquationSpec::new(LinearDrift::scalar(a, b), measure, Arc::new(SeparableDiffusion::zero(1, 1)), delay)
    }

    /// `ẏ = a y_t + b y_{t-r}` with `G ≡ 0`.
    pub fn scalar_dde(a: f64, b: f64, delay: f64) -> Result<Self, EquationError> {
        EquationSpec::scalar_deterministic(a, b, SignedDelayMeasure::dirac(-delay), delay)
    }

    pub fn with_diffusion(&self, diffusion: Arc<dyn SmoothMap>) -> Result<Self, EquationError> {
        EquationSpec::new(self.drift.clone(), self.measure.clone(), diffusion, self.delay)
    }

    /// Number of grid steps per delay at step `h`.
    pub fn delay_steps(&self, step: f64) -> Result<usize, EquationError> {
        if self.delay < step * (1.0 - ALIGN_TOL) {
            return Err(EquationError::DelayBelowStep {
                delay: self.delay,
                step,
            });
        }
        lag_of(-self.delay, step, "delay")
    }

    /// True when `y ≡ 0` is a stationary point: `G(0, 0) = 0` (the drift is
    /// linear).
    pub fn has_zero_stationary_point(&self) -> bool {
        let z = DVector::zeros(self.dim);
        self.diffusion.eval(&z, &z).norm() == 0.0
    }
}

/// Serialized equation, as read from `spec.json`.
///
/// ```json
/// {
///   "dim": 1, "noise_dim": 1, "delay": 1.0,
///   "drift": { "current": [-1.0], "memory": [0.3] },
///   "measure": { "atoms": [{ "location": -1.0, "weight": [1.0] }] },
///   "diffusion": { "profile": "linear", "current": [1.0] },
///   "epsilon": 0.05,
///   "initial": [1.0]
/// }
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquationDocument {
    pub dim: usize,
    pub noise_dim: usize,
    pub delay: f64,
    pub drift: DriftDocument,
    #[serde(default)]
    pub measure: MeasureDocument,
    #[serde(default = "BuiltinDiffusion::zero")]
    pub diffusion: BuiltinDiffusion,
    /// Scale applied to every diffusion coefficient.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// Constant initial segment `ξ ≡ initial` on `[-r, 0]`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftDocument {
    pub current: Vec<f64>,
    #[serde(default)]
    pub memory: Vec<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureDocument {
    #[serde(default)]
    pub atoms: Vec<AtomDocument>,
    #[serde(default)]
    pub density: Vec<DensityDocument>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomDocument {
    pub location: f64,
    pub weight: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityDocument {
    pub from: f64,
    pub to: f64,
    pub weight: Vec<f64>,
}

fn square(name: &str, v: &[f64], n: usize) -> Result<DMatrix<f64>, EquationError> {
    if v.is_empty() {
        return Ok(DMatrix::zeros(n, n));
    }
    if v.len() != n * n {
        return Err(EquationError::Dimension(format!("{name} has {} entries, expected {}", v.len(), n * n)));
    }
    Ok(DMatrix::from_row_slice(n, n, v))
}

impl EquationDocument {
    pub fn to_spec(&self) -> Result<EquationSpec, EquationError> {
        let n = self.dim;
        if n == 0 || self.noise_dim == 0 {
            return Err(EquationError::Dimension("dimensions must be positive".into()));
        }
        let drift = LinearDrift::new(square("drift.current", &self.drift.current, n)?, square("drift.memory", &self.drift.memory, n)?);
        let measure = SignedDelayMeasure {
            atoms: self
                .measure
                .atoms
                .iter()
                .map(|a| {
                    Ok(DelayAtom {
                        location: a.location,
                        weight: square("atom weight", &a.weight, n)?,
                    })
                })
                .collect::<Result<_, EquationError>>()?,
            density: self
                .measure
                .density
                .iter()
                .map(|p| {
                    Ok(DensityPiece {
                        from: p.from,
                        to: p.to,
                        weight: square("density weight", &p.weight, n)?,
                    })
                })
                .collect::<Result<_, EquationError>>()?,
        };
        let mut g = self.diffusion.bind(n, self.noise_dim)?;
        if let Some(eps) = self.epsilon {
            g = g.scaled(eps);
        }
        EquationSpec::new(drift, measure, Arc::new(g), self.delay)
    }

    /// The initial value, defaulting to the unit vector along the first axis.
    pub fn initial_value(&self) -> Result<DVector<f64>, EquationError> {
        match &self.initial {
            Some(v) if v.len() == self.dim => Ok(DVector::from_column_slice(v)),
            Some(v) => Err(EquationError::Dimension(format!("initial has {} entries, expected {}", v.len(), self.dim))),
            None => {
                let mut v = DVector::zeros(self.dim);
                v[0] = 1.0;
                Ok(v)
            }
        }
    }
}
