//! Delayed rough paths `(X, 𝕏, 𝕏(-r))` built from sampled drivers.
//!
//! Only the consecutive-cell tensors are stored. The area over a coarse pair
//! of nodes `(i, j)` is rebuilt on demand from the Chen relations
//!
//! ```text
//! 𝕏_{i,j}      = Σ_{i<=m<j} 𝕏_m      + X_{i,m}     ⊗ δX_m
//! 𝕏_{i,j}(-r)  = Σ_{i<=m<j} 𝕏_m(-r)  + X_{i-k,m-k} ⊗ δX_m
//! ```
//!
//! where `k` is the delay in grid steps. Tensors are indexed so that
//! `𝕏^{ab} = ∫ X^a d X^b`.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fbm::{SampledPath, UniformGrid};

#[derive(Debug, Error, PartialEq)]
pub enum LiftError {
    #[error("delay must be a positive number of grid steps")]
    NonPositiveDelay,
    #[error("path has {available} steps of history before the origin, {required} required")]
    InsufficientHistory { available: usize, required: usize },
    #[error("window [{from}, {to}] lies outside the sampled span of {nodes} nodes")]
    WindowOutOfRange { from: isize, to: isize, nodes: usize },
    #[error("invalid Hölder exponent {0}")]
    InvalidExponent(f64),
    #[error("mollifier width {epsilon} is smaller than the grid step {step}")]
    DegenerateMollifier { epsilon: f64, step: f64 },
    #[error("mollifier profile is not a nonnegative weight: {0}")]
    InvalidProfile(String),
    #[error("paths are not comparable: {0}")]
    Incompatible(String),
    #[error("malformed lift document: {0}")]
    Malformed(String),
}

/// Piecewise-linear (geometric) lift of a sampled path with a grid-aligned
/// delay of `delay_steps` cells.
#[derive(Clone, Debug, PartialEq)]
pub struct DelayedRoughPath {
    base: SampledPath,
    origin: usize,
    delay_steps: usize,
    cell_area: Vec<DMatrix<f64>>,
    /// Entry `m` belongs to cell `m + delay_steps`.
    cell_delayed_area: Vec<DMatrix<f64>>,
    explicit: BTreeMap<(usize, usize), PairAreas>,
}

/// Explicitly stored areas for a coarse node pair.
#[derive(Clone, Debug, PartialEq)]
pub struct PairAreas {
    pub area: DMatrix<f64>,
    pub delayed: Option<DMatrix<f64>>,
}

/// Discrete Hölder-type seminorms of a delayed rough path.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HolderNormReport {
    pub x_gamma: f64,
    pub area_2gamma: f64,
    pub delayed_area_2gamma: f64,
    pub total: f64,
}

impl HolderNormReport {
    fn new(x_gamma: f64, area_2gamma: f64, delayed_area_2gamma: f64) -> Self {
        HolderNormReport {
            x_gamma,
            area_2gamma,
            delayed_area_2gamma,
            total: x_gamma + area_2gamma + delayed_area_2gamma,
        }
    }
}

fn outer(a: &DVector<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    a * b.transpose()
}

/// Lift `path` to a delayed rough path using the iterated integrals of its
/// piecewise-linear interpolant. On a cell both the path and its `k`-step
/// shift are affine, so the cell tensors are `½ δX_m ⊗ δX_m` and
/// `½ δX_{m-k} ⊗ δX_m`.
pub fn lift_piecewise_linear(path: &SampledPath, delay_steps: usize) -> Result<DelayedRoughPath, LiftError> {
    if delay_steps == 0 {
        return Err(LiftError::NonPositiveDelay);
    }
    let origin = path.origin_index();
    if origin < delay_steps {
        return Err(LiftError::InsufficientHistory {
            available: origin,
            required: delay_steps,
        });
    }
    let cells = path.grid().cells();
    let inc = |m: usize| -> DVector<f64> {
        DVector::from_iterator(
            path.dim(),
            path.value(m + 1).iter().zip(path.value(m)).map(|(a, b)| a - b),
        )
    };
    let increments: Vec<DVector<f64>> = (0..cells).map(inc).collect();
    let cell_area = increments.iter().map(|d| outer(d, d) * 0.5).collect();
    let cell_delayed_area = (delay_steps..cells)
        .map(|m| outer(&increments[m - delay_steps], &increments[m]) * 0.5)
        .collect();
    Ok(DelayedRoughPath {
        base: path.clone(),
        origin,
        delay_steps,
        cell_area,
        cell_delayed_area,
        explicit: BTreeMap::new(),
    })
}

impl DelayedRoughPath {
    pub fn base(&self) -> &SampledPath {
        &self.base
    }

    pub fn dim(&self) -> usize {
        self.base.dim()
    }

    pub fn step(&self) -> f64 {
        self.base.grid().step()
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    pub fn delay(&self) -> f64 {
        self.delay_steps as f64 * self.step()
    }

    /// Node index of time zero.
    pub fn origin(&self) -> usize {
        self.origin
    }

    pub fn nodes(&self) -> usize {
        self.base.grid().len()
    }

    /// Number of steps available after the origin.
    pub fn steps_after_origin(&self) -> usize {
        self.nodes() - 1 - self.origin
    }

    /// Absolute node index of a time offset (in steps) from the origin.
    pub fn node(&self, rel: isize) -> Option<usize> {
        let k = self.origin as isize + rel;
        (k >= 0 && (k as usize) < self.nodes()).then_some(k as usize)
    }

    /// `X_t` at node `k`, measured from the current origin.
    pub fn value(&self, k: usize) -> DVector<f64> {
        let o = self.base.value(self.origin);
        DVector::from_iterator(self.dim(), self.base.value(k).iter().zip(o).map(|(a, b)| a - b))
    }

    /// Increment `X_{t_i, t_j}`.
    pub fn increment(&self, i: usize, j: usize) -> DVector<f64> {
        DVector::from_iterator(
            self.dim(),
            self.base.value(j).iter().zip(self.base.value(i)).map(|(a, b)| a - b),
        )
    }

    /// Increment over cell `m`, i.e. `X_{t_m, t_{m+1}}`.
    pub fn cell_increment(&self, m: usize) -> DVector<f64> {
        self.increment(m, m + 1)
    }

    pub fn cell_area(&self, m: usize) -> &DMatrix<f64> {
        &self.cell_area[m]
    }

    /// Delayed area over cell `m`; defined for `m >= delay_steps`.
    pub fn cell_delayed_area(&self, m: usize) -> Option<&DMatrix<f64>> {
        m.checked_sub(self.delay_steps).and_then(|i| self.cell_delayed_area.get(i))
    }

    /// `𝕏_{t_i, t_j}` for `i <= j`.
    pub fn area(&self, i: usize, j: usize) -> DMatrix<f64> {
        if let Some(p) = self.explicit.get(&(i, j)) {
            return p.area.clone();
        }
        let d = self.dim();
        let mut acc = DMatrix::zeros(d, d);
        for m in i..j {
            acc += &self.cell_area[m];
            acc += outer(&self.increment(i, m), &self.cell_increment(m));
        }
        acc
    }

    /// `𝕏_{t_i, t_j}(-r)` for `delay_steps <= i <= j`.
    pub fn delayed_area(&self, i: usize, j: usize) -> Option<DMatrix<f64>> {
        let k = self.delay_steps;
        if i < k || j >= self.nodes() {
            return None;
        }
        if let Some(p) = self.explicit.get(&(i, j)).and_then(|p| p.delayed.clone()) {
            return Some(p);
        }
        let d = self.dim();
        let mut acc = DMatrix::zeros(d, d);
        for m in i..j {
            acc += &self.cell_delayed_area[m - k];
            acc += outer(&self.increment(i - k, m - k), &self.cell_increment(m));
        }
        Some(acc)
    }

    /// Store every coarse pair within the node window `[from, to]`
    /// explicitly, as a redundant table on which Chen consistency can be
    /// audited. Uses `O((to - from)^2 d^2)` memory.
    pub fn materialize_pairs(&mut self, from: usize, to: usize) -> Result<(), LiftError> {
        if from > to || to >= self.nodes() {
            return Err(LiftError::WindowOutOfRange {
                from: from as isize,
                to: to as isize,
                nodes: self.nodes(),
            });
        }
        for i in from..to {
            for j in i + 2..=to {
                let area = self.area(i, j);
                let delayed = self.delayed_area(i, j);
                self.explicit.insert((i, j), PairAreas { area, delayed });
            }
        }
        Ok(())
    }

    /// Overwrite the stored areas of one pair; for single cells this replaces
    /// the generating cell tensor.
    pub fn set_pair_areas(&mut self, i: usize, j: usize, areas: PairAreas) {
        if j == i + 1 {
            self.cell_area[i] = areas.area;
            if let (Some(d), Some(slot)) = (areas.delayed, i.checked_sub(self.delay_steps)) {
                self.cell_delayed_area[slot] = d;
            }
        } else {
            self.explicit.insert((i, j), areas);
        }
    }

    pub fn explicit_pairs(&self) -> impl Iterator<Item = (&(usize, usize), &PairAreas)> {
        self.explicit.iter()
    }

    /// Maximum normalised residual of both Chen identities.
    ///
    /// Up to 40 nodes every triple is checked. Larger paths are checked on a
    /// fixed pseudo-random sample of triples plus every triple that touches an
    /// explicitly stored pair.
    pub fn validate_chen(&self) -> f64 {
        let n = self.nodes();
        let mut worst = 0.0f64;
        let mut check = |s: usize, u: usize, t: usize| {
            worst = worst.max(self.chen_residual(s, u, t));
        };
        if n <= 40 {
            for s in 0..n {
                for u in s + 1..n {
                    for t in u + 1..n {
                        check(s, u, t);
                    }
                }
            }
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_c4e4);
            for _ in 0..2000 {
                let mut v = [rng.random_range(0..n), rng.random_range(0..n), rng.random_range(0..n)];
                v.sort_unstable();
                if v[0] < v[1] && v[1] < v[2] {
                    check(v[0], v[1], v[2]);
                }
            }
            for &(i, j) in self.explicit.keys() {
                for u in i + 1..j {
                    check(i, u, j);
                }
            }
        }
        worst
    }

    /// Relative residual of both Chen identities on the triple `s < u < t`.
    pub fn chen_residual(&self, s: usize, u: usize, t: usize) -> f64 {
        let xsu = self.increment(s, u);
        let xut = self.increment(u, t);
        let (ast, asu, aut) = (self.area(s, t), self.area(s, u), self.area(u, t));
        let cross = outer(&xsu, &xut);
        let mag = ast.norm().max(asu.norm()).max(aut.norm()).max(cross.norm());
        let mut res = (&ast - &asu - &aut - &cross).norm() / (1.0 + mag);
        if s >= self.delay_steps {
            let k = self.delay_steps;
            if let (Some(dst), Some(dsu), Some(dut)) =
                (self.delayed_area(s, t), self.delayed_area(s, u), self.delayed_area(u, t))
            {
                let dcross = outer(&self.increment(s - k, u - k), &xut);
                let mag = dst.norm().max(dsu.norm()).max(dut.norm()).max(dcross.norm());
                res = res.max((&dst - &dsu - &dut - &dcross).norm() / (1.0 + mag));
            }
        }
        res
    }

    /// Discrete Hölder seminorms over all grid pairs.
    pub fn holder_norms(&self, gamma: f64) -> Result<HolderNormReport, LiftError> {
        self.window_norms(0, self.nodes() - 1, gamma)
    }

    /// Discrete Hölder seminorms over all node pairs in `[from, to]`. The
    /// delayed area only enters for pairs with at least `delay_steps` of
    /// history.
    pub fn window_norms(&self, from: usize, to: usize, gamma: f64) -> Result<HolderNormReport, LiftError> {
        if !(gamma > 0.0 && gamma <= 1.0) {
            return Err(LiftError::InvalidExponent(gamma));
        }
        if from > to || to >= self.nodes() {
            return Err(LiftError::WindowOutOfRange {
                from: from as isize,
                to: to as isize,
                nodes: self.nodes(),
            });
        }
        let h = self.step();
        let k = self.delay_steps;
        let d = self.dim();
        let (mut xg, mut ag, mut dg) = (0.0f64, 0.0f64, 0.0f64);
        for i in from..to {
            let mut area = DMatrix::zeros(d, d);
            let mut delayed = DMatrix::zeros(d, d);
            let has_delay = i >= k && self.explicit.is_empty();
            for j in i + 1..=to {
                let m = j - 1;
                let dx = self.cell_increment(m);
                area += &self.cell_area[m];
                area += outer(&self.increment(i, m), &dx);
                let dt = (j - i) as f64 * h;
                xg = xg.max(self.increment(i, j).norm() / dt.powf(gamma));
                let a = if self.explicit.is_empty() { area.norm() } else { self.area(i, j).norm() };
                ag = ag.max(a / dt.powf(2.0 * gamma));
                if has_delay {
                    delayed += &self.cell_delayed_area[m - k];
                    delayed += outer(&self.increment(i - k, m - k), &dx);
                    dg = dg.max(delayed.norm() / dt.powf(2.0 * gamma));
                } else if i >= k {
                    if let Some(dl) = self.delayed_area(i, j) {
                        dg = dg.max(dl.norm() / dt.powf(2.0 * gamma));
                    }
                }
            }
        }
        Ok(HolderNormReport::new(xg, ag, dg))
    }

    /// Re-base the path at `shift_steps` grid steps from the current origin.
    /// Only the origin moves, so shifts compose exactly.
    pub fn shift(&self, shift_steps: isize) -> Result<DelayedRoughPath, LiftError> {
        let new_origin = self.origin as isize + shift_steps;
        if new_origin < 0 || new_origin as usize >= self.nodes() {
            return Err(LiftError::WindowOutOfRange {
                from: new_origin,
                to: new_origin,
                nodes: self.nodes(),
            });
        }
        let mut out = self.clone();
        out.origin = new_origin as usize;
        Ok(out)
    }

    /// Distance in the homogeneous metric
    /// `sup|δX-δY|/Δ^γ + sup|𝕏-𝕐|^{1/2}/Δ^γ + sup|𝕏(-r)-𝕐(-r)|^{1/2}/Δ^γ`
    /// over node pairs of the common time window, aligned at time zero.
    pub fn homogeneous_distance(&self, other: &DelayedRoughPath, gamma: f64) -> Result<f64, LiftError> {
        if (self.step() - other.step()).abs() > 1e-12 * self.step()
            || self.delay_steps != other.delay_steps
            || self.dim() != other.dim()
        {
            return Err(LiftError::Incompatible("step, delay or dimension differ".into()));
        }
        let lo = -(self.origin.min(other.origin) as isize) + self.delay_steps as isize;
        let hi = self.steps_after_origin().min(other.steps_after_origin()) as isize;
        if lo >= hi {
            return Err(LiftError::Incompatible("no common window".into()));
        }
        let h = self.step();
        let (mut dx, mut da, mut dd) = (0.0f64, 0.0f64, 0.0f64);
        for i in lo..hi {
            for j in i + 1..=hi {
                let (a0, a1) = (self.node(i).unwrap(), self.node(j).unwrap());
                let (b0, b1) = (other.node(i).unwrap(), other.node(j).unwrap());
                let dt = (j - i) as f64 * h;
                let g = dt.powf(gamma);
                dx = dx.max((self.increment(a0, a1) - other.increment(b0, b1)).norm() / g);
                da = da.max((self.area(a0, a1) - other.area(b0, b1)).norm().sqrt() / g);
                if let (Some(p), Some(q)) = (self.delayed_area(a0, a1), other.delayed_area(b0, b1)) {
                    dd = dd.max((p - q).norm().sqrt() / g);
                }
            }
        }
        Ok(dx + da + dd)
    }

    pub fn to_document(&self, gamma: Option<f64>) -> LiftDocument {
        let d = self.dim();
        let flat = |m: &DMatrix<f64>| -> Vec<f64> {
            (0..d).flat_map(|a| (0..d).map(move |b| (a, b))).map(|(a, b)| m[(a, b)]).collect()
        };
        LiftDocument {
            schema_version: LIFT_SCHEMA_VERSION,
            step: self.step(),
            nodes: self.nodes(),
            origin_index: self.origin,
            dim: d,
            delay_steps: self.delay_steps,
            values: self.base.raw_values().to_vec(),
            cell_areas: self.cell_area.iter().map(flat).collect(),
            cell_delayed_areas: self.cell_delayed_area.iter().map(flat).collect(),
            gamma,
            holder_norms: gamma.and_then(|g| self.holder_norms(g).ok()),
            chen_residual: Some(self.validate_chen()),
        }
    }

    pub fn from_document(doc: &LiftDocument) -> Result<DelayedRoughPath, LiftError> {
        let bad = |m: &str| LiftError::Malformed(m.to_string());
        if doc.nodes == 0 || doc.origin_index >= doc.nodes {
            return Err(bad("origin outside grid"));
        }
        let grid = UniformGrid::new(doc.step, doc.origin_index, doc.nodes - 1 - doc.origin_index)
            .map_err(|e| LiftError::Malformed(e.to_string()))?;
        let base = SampledPath::new(grid, doc.dim, doc.values.clone()).map_err(|e| LiftError::Malformed(e.to_string()))?;
        let d = doc.dim;
        let cells = doc.nodes - 1;
        if doc.cell_areas.len() != cells || doc.cell_delayed_areas.len() != cells.saturating_sub(doc.delay_steps) {
            return Err(bad("wrong number of cell tensors"));
        }
        let mat = |v: &Vec<f64>| -> Result<DMatrix<f64>, LiftError> {
            if v.len() != d * d {
                return Err(bad("tensor has wrong size"));
            }
            Ok(DMatrix::from_row_slice(d, d, v))
        };
        Ok(DelayedRoughPath {
            base,
            origin: doc.origin_index,
            delay_steps: doc.delay_steps,
            cell_area: doc.cell_areas.iter().map(mat).collect::<Result<_, _>>()?,
            cell_delayed_area: doc.cell_delayed_areas.iter().map(mat).collect::<Result<_, _>>()?,
            explicit: BTreeMap::new(),
        })
    }
}

pub const LIFT_SCHEMA_VERSION: u32 = 1;

/// JSON form of a lift: base grid, node values (node-major), consecutive-cell
/// tensors (row-major `d x d`), and diagnostics. Delayed cell tensors start
/// at cell `delay_steps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LiftDocument {
    pub schema_version: u32,
    pub step: f64,
    pub nodes: usize,
    pub origin_index: usize,
    pub dim: usize,
    pub delay_steps: usize,
    pub values: Vec<f64>,
    pub cell_areas: Vec<Vec<f64>>,
    pub cell_delayed_areas: Vec<Vec<f64>>,
    #[serde(default)]
    pub gamma: Option<f64>,
    #[serde(default)]
    pub holder_norms: Option<HolderNormReport>,
    #[serde(default)]
    pub chen_residual: Option<f64>,
}

/// Mollified path `B^ε_t = B_0 + ∫_0^1 B_{-εz, t-εz} ρ(z) dz`, with the
/// integral evaluated by the trapezoid rule on the grid nodes `εz = m h`.
///
/// `epsilon` is rounded to the nearest multiple of the step. The result
/// loses the first `ε/h` nodes of history.
pub fn mollify(path: &SampledPath, epsilon: f64, rho: impl Fn(f64) -> f64) -> Result<SampledPath, LiftError> {
    let h = path.grid().step();
    if !(epsilon.is_finite()) || epsilon < h * (1.0 - 1e-9) {
        return Err(LiftError::DegenerateMollifier { epsilon, step: h });
    }
    let width = (epsilon / h).round() as usize;
    let o = path.origin_index();
    if o < width {
        return Err(LiftError::InsufficientHistory {
            available: o,
            required: width,
        });
    }
    let mut weights: Vec<f64> = (0..=width)
        .map(|m| {
            let end = if m == 0 || m == width { 0.5 } else { 1.0 };
            rho(m as f64 / width as f64) * end / width as f64
        })
        .collect();
    if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
        return Err(LiftError::InvalidProfile("negative or non-finite weight".into()));
    }
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return Err(LiftError::InvalidProfile("profile integrates to zero".into()));
    }
    weights.iter_mut().for_each(|w| *w /= total);

    let d = path.dim();
    let n = path.grid().len();
    let grid = UniformGrid::new(h, o - width, n - 1 - o).map_err(|e| LiftError::Malformed(e.to_string()))?;
    let b0 = path.value(o).to_vec();
    let mut values = Vec::with_capacity(grid.len() * d);
    for k in width..n {
        for c in 0..d {
            let mut acc = b0[c];
            for (m, w) in weights.iter().enumerate() {
                acc += w * (path.component(k - m, c) - path.component(o - m, c));
            }
            values.push(acc);
        }
    }
    SampledPath::new(grid, d, values).map_err(|e| LiftError::Malformed(e.to_string()))
}
