//! Controlled and delayed-controlled path segments.
//!
//! Segments live on the grid of a [`DelayedRoughPath`]; their `start` is a
//! node offset from the rough path's origin (time zero), so a segment on
//! `[-r, 0]` starts at `-delay_steps`.

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::diffusion::SmoothMap;
use crate::lift::DelayedRoughPath;

#[derive(Debug, Error, PartialEq)]
pub enum SegmentError {
    #[error("segment has {values} values but {derivs} derivatives")]
    LengthMismatch { values: usize, derivs: usize },
    #[error("segment is empty")]
    Empty,
    #[error("inconsistent shapes: {0}")]
    Shape(String),
    #[error("windows are not aligned by the delay: {0}")]
    Misaligned(String),
    #[error("segment nodes [{from}, {to}] fall outside the rough path")]
    OutsideDriver { from: isize, to: isize },
}

/// Linear map `L(R^d, L(R^d, R^n))`, stored as one `n x d` block per driver
/// direction `c`: `T[c]_{ab}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DerivativeTensor {
    blocks: Vec<DMatrix<f64>>,
}

impl DerivativeTensor {
    pub fn zeros(n: usize, d: usize) -> Self {
        DerivativeTensor {
            blocks: vec![DMatrix::zeros(n, d); d],
        }
    }

    pub fn from_blocks(blocks: Vec<DMatrix<f64>>) -> Self {
        DerivativeTensor { blocks }
    }

    /// `Σ_e P_e · M[e, c]` for each `c`: composes per-coordinate partials of
    /// `G` with an `n x d` Gubinelli derivative `M`.
    pub fn compose(partials: &[DMatrix<f64>], deriv: &DMatrix<f64>) -> Self {
        let (n, d) = deriv.shape();
        let mut blocks = vec![DMatrix::zeros(partials.first().map_or(n, |p| p.nrows()), d); d];
        for (c, block) in blocks.iter_mut().enumerate() {
            for (e, p) in partials.iter().enumerate() {
                let w = deriv[(e, c)];
                if w != 0.0 {
                    *block += p * w;
                }
            }
        }
        DerivativeTensor { blocks }
    }

    pub fn blocks(&self) -> &[DMatrix<f64>] {
        &self.blocks
    }

    /// Contract with a second-level tensor: `Σ_{b,c} T[c]_{ab} 𝕏^{cb}`.
    pub fn apply_area(&self, area: &DMatrix<f64>) -> DVector<f64> {
        let n = self.blocks[0].nrows();
        let mut out = DVector::zeros(n);
        for (c, block) in self.blocks.iter().enumerate() {
            out.gemv(1.0, block, &area.row(c).transpose(), 1.0);
        }
        out
    }

    /// Contract with a driver increment: `Σ_c T[c] δX^c`, an `n x d` matrix.
    pub fn apply_increment(&self, dx: &DVector<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(self.blocks[0].nrows(), self.blocks[0].ncols());
        for (c, block) in self.blocks.iter().enumerate() {
            out += block * dx[c];
        }
        out
    }

    pub fn norm(&self) -> f64 {
        self.blocks.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
    }

    pub fn sub(&self, other: &DerivativeTensor) -> DerivativeTensor {
        DerivativeTensor {
            blocks: self.blocks.iter().zip(&other.blocks).map(|(a, b)| a - b).collect(),
        }
    }

    pub fn add_assign(&mut self, other: &DerivativeTensor) {
        for (a, b) in self.blocks.iter_mut().zip(&other.blocks) {
            *a += b;
        }
    }
}

/// Path `y` with Gubinelli derivative `y'` (`n x d` per node).
#[derive(Clone, Debug, PartialEq)]
pub struct ControlledSegment {
    start: isize,
    values: Vec<DVector<f64>>,
    derivs: Vec<DMatrix<f64>>,
}

impl ControlledSegment {
    pub fn new(start: isize, values: Vec<DVector<f64>>, derivs: Vec<DMatrix<f64>>) -> Result<Self, SegmentError> {
        if values.len() != derivs.len() {
            return Err(SegmentError::LengthMismatch {
                values: values.len(),
                derivs: derivs.len(),
            });
        }
        let Some(first) = values.first() else {
            return Err(SegmentError::Empty);
        };
        let n = first.len();
        let shape = derivs[0].shape();
        if shape.0 != n
            || values.iter().any(|v| v.len() != n)
            || derivs.iter().any(|m| m.shape() != shape)
        {
            return Err(SegmentError::Shape("values and derivatives disagree".into()));
        }
        Ok(ControlledSegment { start, values, derivs })
    }

    /// Lift plain data with `y' ≡ 0`; increments go entirely into the
    /// remainder.
    pub fn from_smooth(start: isize, values: Vec<DVector<f64>>, noise_dim: usize) -> Result<Self, SegmentError> {
        let n = values.first().map_or(0, |v| v.len());
        let derivs = vec![DMatrix::zeros(n, noise_dim); values.len()];
        ControlledSegment::new(start, values, derivs)
    }

    /// Constant segment of `len` nodes.
    pub fn constant(start: isize, len: usize, value: DVector<f64>, noise_dim: usize) -> Self {
        let n = value.len();
        ControlledSegment {
            start,
            values: vec![value; len],
            derivs: vec![DMatrix::zeros(n, noise_dim); len],
        }
    }

    pub fn start(&self) -> isize {
        self.start
    }

    /// Offset of the last node.
    pub fn end(&self) -> isize {
        self.start + self.values.len() as isize - 1
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn state_dim(&self) -> usize {
        self.values[0].len()
    }

    pub fn noise_dim(&self) -> usize {
        self.derivs[0].ncols()
    }

    pub fn values(&self) -> &[DVector<f64>] {
        &self.values
    }

    pub fn derivs(&self) -> &[DMatrix<f64>] {
        &self.derivs
    }

    /// Value at node offset `rel` (same convention as `start`).
    pub fn value_at(&self, rel: isize) -> Option<&DVector<f64>> {
        usize::try_from(rel - self.start).ok().and_then(|i| self.values.get(i))
    }

    pub fn deriv_at(&self, rel: isize) -> Option<&DMatrix<f64>> {
        usize::try_from(rel - self.start).ok().and_then(|i| self.derivs.get(i))
    }

    /// The same data moved to start at `start`.
    pub fn rebased(&self, start: isize) -> Self {
        ControlledSegment {
            start,
            ..self.clone()
        }
    }

    pub fn scaled(&self, s: f64) -> Self {
        ControlledSegment {
            start: self.start,
            values: self.values.iter().map(|v| v * s).collect(),
            derivs: self.derivs.iter().map(|m| m * s).collect(),
        }
    }

    /// `self + s * other`, node-wise.
    pub fn axpy(&self, s: f64, other: &ControlledSegment) -> Self {
        ControlledSegment {
            start: self.start,
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b * s).collect(),
            derivs: self.derivs.iter().zip(&other.derivs).map(|(a, b)| a + b * s).collect(),
        }
    }

    fn nodes_in(&self, drp: &DelayedRoughPath) -> Result<usize, SegmentError> {
        match (drp.node(self.start), drp.node(self.end())) {
            (Some(a), Some(_)) => Ok(a),
            _ => Err(SegmentError::OutsideDriver {
                from: self.start,
                to: self.end(),
            }),
        }
    }

    /// Remainder `y#_{s,t} = δy_{s,t} - y'_s δX_{s,t}` between local node
    /// indices `i <= j`.
    pub fn remainder(&self, i: usize, j: usize, drp: &DelayedRoughPath) -> Result<DVector<f64>, SegmentError> {
        let base = self.nodes_in(drp)?;
        let dx = drp.increment(base + i, base + j);
        Ok(&self.values[j] - &self.values[i] - &self.derivs[i] * dx)
    }

    /// `|y|_∞ + |y'|_∞ + ‖y'‖_β + ‖y#‖_{2β}` with both seminorms taken over
    /// every node pair of the segment.
    pub fn controlled_norm(&self, beta: f64, drp: &DelayedRoughPath) -> Result<f64, SegmentError> {
        Ok(self.norm_parts(beta, drp, false)?.iter().sum())
    }

    /// Same as [`ControlledSegment::controlled_norm`] but with the seminorms
    /// restricted to consecutive nodes.
    pub fn controlled_norm_consecutive(&self, beta: f64, drp: &DelayedRoughPath) -> Result<f64, SegmentError> {
        Ok(self.norm_parts(beta, drp, true)?.iter().sum())
    }

    /// `[|y|_∞, |y'|_∞, ‖y'‖_β, ‖y#‖_{2β}]`.
    pub fn norm_parts(&self, beta: f64, drp: &DelayedRoughPath, consecutive: bool) -> Result<[f64; 4], SegmentError> {
        let base = self.nodes_in(drp)?;
        let h = drp.step();
        let sup_y = self.values.iter().map(|v| v.norm()).fold(0.0, f64::max);
        let sup_d = self.derivs.iter().map(|m| m.norm()).fold(0.0, f64::max);
        let (mut hd, mut hr) = (0.0f64, 0.0f64);
        let len = self.len();
        for i in 0..len {
            let last = if consecutive { (i + 1).min(len - 1) } else { len - 1 };
            for j in i + 1..=last {
                let dt = (j - i) as f64 * h;
                hd = hd.max((&self.derivs[j] - &self.derivs[i]).norm() / dt.powf(beta));
                let dx = drp.increment(base + i, base + j);
                let rem = &self.values[j] - &self.values[i] - &self.derivs[i] * dx;
                hr = hr.max(rem.norm() / dt.powf(2.0 * beta));
            }
        }
        Ok([sup_y, sup_d, hd, hr])
    }
}

/// Free-function form of [`ControlledSegment::controlled_norm`].
pub fn controlled_norm(seg: &ControlledSegment, beta: f64, drp: &DelayedRoughPath) -> Result<f64, SegmentError> {
    seg.controlled_norm(beta, drp)
}

/// `L(R^d, R^n)`-valued path `ζ` with derivatives `ζ⁰` (against `δX_{s,t}`)
/// and `ζ¹` (against `δX_{s-r,t-r}`).
#[derive(Clone, Debug, PartialEq)]
pub struct DelayedControlledSegment {
    start: isize,
    delay_steps: usize,
    zeta: Vec<DMatrix<f64>>,
    zeta0: Vec<DerivativeTensor>,
    zeta1: Vec<DerivativeTensor>,
}

impl DelayedControlledSegment {
    pub fn new(
        start: isize,
        delay_steps: usize,
        zeta: Vec<DMatrix<f64>>,
        zeta0: Vec<DerivativeTensor>,
        zeta1: Vec<DerivativeTensor>,
    ) -> Result<Self, SegmentError> {
        if zeta.is_empty() {
            return Err(SegmentError::Empty);
        }
        if zeta0.len() != zeta.len() || zeta1.len() != zeta.len() {
            return Err(SegmentError::LengthMismatch {
                values: zeta.len(),
                derivs: zeta0.len().min(zeta1.len()),
            });
        }
        Ok(DelayedControlledSegment {
            start,
            delay_steps,
            zeta,
            zeta0,
            zeta1,
        })
    }

    /// Constant integrand with vanishing derivatives.
    pub fn constant(start: isize, len: usize, delay_steps: usize, value: DMatrix<f64>) -> Self {
        let (n, d) = value.shape();
        DelayedControlledSegment {
            start,
            delay_steps,
            zeta: vec![value; len],
            zeta0: vec![DerivativeTensor::zeros(n, d); len],
            zeta1: vec![DerivativeTensor::zeros(n, d); len],
        }
    }

    pub fn start(&self) -> isize {
        self.start
    }

    pub fn end(&self) -> isize {
        self.start + self.zeta.len() as isize - 1
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn zeta(&self) -> &[DMatrix<f64>] {
        &self.zeta
    }

    pub fn zeta0(&self) -> &[DerivativeTensor] {
        &self.zeta0
    }

    pub fn zeta1(&self) -> &[DerivativeTensor] {
        &self.zeta1
    }

    pub(crate) fn driver_base(&self, drp: &DelayedRoughPath) -> Result<usize, SegmentError> {
        let a = drp.node(self.start);
        let b = drp.node(self.end());
        match (a, b) {
            (Some(a), Some(_)) if a >= drp.delay_steps() => Ok(a),
            _ => Err(SegmentError::OutsideDriver {
                from: self.start,
                to: self.end(),
            }),
        }
    }

    /// `ζ#_{s,t} = δζ_{s,t} - ζ⁰_s δX_{s,t} - ζ¹_s δX_{s-r,t-r}`.
    pub fn remainder(&self, i: usize, j: usize, drp: &DelayedRoughPath) -> Result<DMatrix<f64>, SegmentError> {
        let base = self.driver_base(drp)?;
        let k = drp.delay_steps();
        let dx = drp.increment(base + i, base + j);
        let dxr = drp.increment(base + i - k, base + j - k);
        Ok(&self.zeta[j] - &self.zeta[i] - self.zeta0[i].apply_increment(&dx) - self.zeta1[i].apply_increment(&dxr))
    }

    /// `‖ζ#‖_{2β}` over every node pair.
    pub fn remainder_seminorm(&self, beta: f64, drp: &DelayedRoughPath) -> Result<f64, SegmentError> {
        let h = drp.step();
        let mut worst = 0.0f64;
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let dt = (j - i) as f64 * h;
                worst = worst.max(self.remainder(i, j, drp)?.norm() / dt.powf(2.0 * beta));
            }
        }
        Ok(worst)
    }

    /// `|ζ_a| + |ζ⁰_a| + |ζ¹_a| + ‖ζ⁰‖_β + ‖ζ¹‖_β + ‖ζ#‖_{2β}`.
    pub fn norm(&self, beta: f64, drp: &DelayedRoughPath) -> Result<f64, SegmentError> {
        let h = drp.step();
        let (mut h0, mut h1) = (0.0f64, 0.0f64);
        for i in 0..self.len() {
            for j in i + 1..self.len() {
                let dt = ((j - i) as f64 * h).powf(beta);
                h0 = h0.max(self.zeta0[j].sub(&self.zeta0[i]).norm() / dt);
                h1 = h1.max(self.zeta1[j].sub(&self.zeta1[i]).norm() / dt);
            }
        }
        Ok(self.zeta[0].norm()
            + self.zeta0[0].norm()
            + self.zeta1[0].norm()
            + h0
            + h1
            + self.remainder_seminorm(beta, drp)?)
    }
}

/// Compose `ζ_u = G(y_u, ỹ_{u-r})` where `y_now` covers `[s, t]` and
/// `y_delayed` covers `[s-r, t-r]`:
/// `ζ⁰ = ∂G/∂x · y'_u`, `ζ¹ = ∂G/∂y · ỹ'_{u-r}`.
pub fn compose_with_g(
    y_now: &ControlledSegment,
    y_delayed: &ControlledSegment,
    g: &dyn SmoothMap,
    delay_steps: usize,
) -> Result<DelayedControlledSegment, SegmentError> {
    if y_now.len() != y_delayed.len() || y_delayed.start + delay_steps as isize != y_now.start {
        return Err(SegmentError::Misaligned(format!(
            "current window starts at {} with {} nodes, delayed at {} with {} nodes, delay {}",
            y_now.start,
            y_now.len(),
            y_delayed.start,
            y_delayed.len(),
            delay_steps
        )));
    }
    if g.state_dim() != y_now.state_dim() || g.noise_dim() != y_now.noise_dim() {
        return Err(SegmentError::Shape("diffusion dimensions differ from the segment".into()));
    }
    let mut zeta = Vec::with_capacity(y_now.len());
    let mut zeta0 = Vec::with_capacity(y_now.len());
    let mut zeta1 = Vec::with_capacity(y_now.len());
    for i in 0..y_now.len() {
        let (x, y) = (&y_now.values[i], &y_delayed.values[i]);
        zeta.push(g.eval(x, y));
        let (px, py) = g.partials(x, y);
        zeta0.push(DerivativeTensor::compose(&px, &y_now.derivs[i]));
        zeta1.push(DerivativeTensor::compose(&py, &y_delayed.derivs[i]));
    }
    DelayedControlledSegment::new(y_now.start, delay_steps, zeta, zeta0, zeta1)
}
