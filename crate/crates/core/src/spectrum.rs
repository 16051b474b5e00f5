//! Deterministic linear delay equations: characteristic matrix, root
//! enumeration by the argument principle, spectral abscissa, and the
//! method-of-steps semigroup.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::equation::{op_norm, DiscreteMeasure, EquationError, EquationSpec};

#[derive(Debug, Error, PartialEq)]
pub enum SpectrumError {
    #[error("a characteristic root lies on the boundary of {0:?}")]
    BoundaryRoot(Rect),
    #[error("region {0:?} is empty or unbounded")]
    InvalidRegion(Rect),
    #[error("winding number {0} is not an integer")]
    NonIntegralWinding(f64),
    #[error("region expansion exceeded its limit at Re z = {0}")]
    RegionLimit(f64),
    #[error("initial segment has {got} nodes, expected {expected}")]
    InitialWindow { got: usize, expected: usize },
    #[error(transparent)]
    Equation(#[from] EquationError),
}

/// Axis-parallel rectangle `[re0, re1] x [im0, im1]` in the complex plane.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub re0: f64,
    pub re1: f64,
    pub im0: f64,
    pub im1: f64,
}

impl Rect {
    pub fn new(re0: f64, re1: f64, im0: f64, im1: f64) -> Self {
        Rect { re0, re1, im0, im1 }
    }

    fn width(&self) -> f64 {
        self.re1 - self.re0
    }

    fn height(&self) -> f64 {
        self.im1 - self.im0
    }

    fn center(&self) -> Complex64 {
        Complex64::new(0.5 * (self.re0 + self.re1), 0.5 * (self.im0 + self.im1))
    }

    fn contains(&self, z: Complex64, slack: f64) -> bool {
        z.re >= self.re0 - slack && z.re <= self.re1 + slack && z.im >= self.im0 - slack && z.im <= self.im1 + slack
    }

    fn split(&self, frac: f64) -> (Rect, Rect) {
        if self.width() >= self.height() {
            let m = self.re0 + frac * self.width();
            (Rect { re1: m, ..*self }, Rect { re0: m, ..*self })
        } else {
            let m = self.im0 + frac * self.height();
            (Rect { im1: m, ..*self }, Rect { im0: m, ..*self })
        }
    }
}

/// `Δ(z) = zI - A₀ - A₁ ∫ e^{zθ} π(dθ)`.
#[derive(Clone, Debug)]
pub struct CharacteristicMatrix<'a> {
    spec: &'a EquationSpec,
}

impl<'a> CharacteristicMatrix<'a> {
    pub fn new(spec: &'a EquationSpec) -> Self {
        CharacteristicMatrix { spec }
    }

    fn complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
        m.map(Complex64::from)
    }

    pub fn eval(&self, z: Complex64) -> DMatrix<Complex64> {
        let n = self.spec.dim;
        let mut out = DMatrix::<Complex64>::identity(n, n) * z;
        out -= Self::complex(&self.spec.drift.current);
        out -= Self::complex(&self.spec.drift.memory) * self.spec.measure.laplace(n, z);
        out
    }

    /// `Δ'(z) = I - A₁ ∫ θ e^{zθ} π(dθ)`.
    pub fn derivative(&self, z: Complex64) -> DMatrix<Complex64> {
        let n = self.spec.dim;
        DMatrix::<Complex64>::identity(n, n) - Self::complex(&self.spec.drift.memory) * self.spec.measure.laplace_derivative(n, z)
    }

    pub fn det(&self, z: Complex64) -> Complex64 {
        self.eval(z).determinant()
    }

    /// `det Δ(z) / (d/dz det Δ(z))`, the Newton correction.
    fn newton_ratio(&self, z: Complex64) -> Option<Complex64> {
        let delta = self.eval(z);
        let lu = delta.clone().lu();
        if let Some(inv) = lu.try_inverse() {
            let tr = (inv * self.derivative(z)).trace();
            if tr.norm() > 0.0 && tr.is_finite() {
                return Some(Complex64::from(1.0) / tr);
            }
        }
        // singular to working precision: fall back to a difference quotient
        let f = delta.determinant();
        if f == Complex64::from(0.0) {
            return Some(Complex64::from(0.0));
        }
        let dz = 1e-7 * (1.0 + z.norm());
        let df = (self.det(z + dz) - self.det(z - dz)) / (2.0 * dz);
        (df.norm() > 0.0).then(|| f / df)
    }

    /// Bounds `(‖A₀‖, ‖A₁‖ |π|)` entering the root envelope.
    fn envelope(&self) -> (f64, f64) {
        (op_norm(&self.spec.drift.current), op_norm(&self.spec.drift.memory) * self.spec.measure.total_variation())
    }

    /// `|Im z|` bound for roots with `Re z >= sigma`.
    fn imag_bound(&self, sigma: f64) -> f64 {
        let (a0, a1) = self.envelope();
        a0 + a1 * (sigma.min(0.0).abs() * self.spec.delay).exp() + 1.0
    }
}

/// `det Δ(z)` for the drift and delay measure of `spec` (the diffusion is
/// ignored).
pub fn char_det(spec: &EquationSpec, z: Complex64) -> Complex64 {
    CharacteristicMatrix::new(spec).det(z)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub re: f64,
    pub im: f64,
    /// `|det Δ(z)|` at the polished root.
    pub residual: f64,
    pub multiplicity: usize,
}

impl Root {
    pub fn z(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub roots: Vec<Root>,
    /// Largest real part among the roots found, if any.
    pub abscissa: Option<f64>,
    pub region: Rect,
    /// Argument-principle count over the whole region.
    pub winding: usize,
}

impl SpectralReport {
    /// Total multiplicity of the polished roots.
    pub fn root_count(&self) -> usize {
        self.roots.iter().map(|r| r.multiplicity).sum()
    }
}

const MAX_EDGE_DEPTH: usize = 48;
const MULTIPLE_ROOT_CELL: f64 = 1e-6;
const DEDUP_RADIUS: f64 = 1e-6;

struct Finder<'a> {
    cm: CharacteristicMatrix<'a>,
    scale: f64,
}

impl Finder<'_> {
    /// Accumulated `Δ arg det` along the segment `a -> b`.
    fn edge_phase(&self, a: Complex64, b: Complex64) -> Option<f64> {
        let samples = 16;
        let mut total = 0.0;
        let mut prev_z = a;
        let mut prev_f = self.cm.det(a);
        for i in 1..=samples {
            let z = a + (b - a) * (i as f64 / samples as f64);
            let f = self.cm.det(z);
            total += self.phase_between(prev_z, prev_f, z, f, 0)?;
            prev_z = z;
            prev_f = f;
        }
        Some(total)
    }

    fn phase_between(&self, za: Complex64, fa: Complex64, zb: Complex64, fb: Complex64, depth: usize) -> Option<f64> {
        if fa == Complex64::from(0.0) || fb == Complex64::from(0.0) || !fa.is_finite() || !fb.is_finite() {
            return None;
        }
        let d = (fb / fa).arg();
        if d.abs() < PI / 4.0 {
            return Some(d);
        }
        if depth >= MAX_EDGE_DEPTH || (zb - za).norm() < 1e-14 * self.scale {
            return None;
        }
        let zm = (za + zb) * 0.5;
        let fm = self.cm.det(zm);
        Some(self.phase_between(za, fa, zm, fm, depth + 1)? + self.phase_between(zm, fm, zb, fb, depth + 1)?)
    }

    fn winding(&self, r: &Rect) -> Result<usize, SpectrumError> {
        let c = [
            Complex64::new(r.re0, r.im0),
            Complex64::new(r.re1, r.im0),
            Complex64::new(r.re1, r.im1),
            Complex64::new(r.re0, r.im1),
        ];
        let mut total = 0.0;
        for i in 0..4 {
            total += self.edge_phase(c[i], c[(i + 1) % 4]).ok_or(SpectrumError::BoundaryRoot(*r))?;
        }
        let w = total / (2.0 * PI);
        if (w - w.round()).abs() > 0.1 || w.round() < 0.0 {
            return Err(SpectrumError::NonIntegralWinding(w));
        }
        Ok(w.round() as usize)
    }

    fn newton(&self, start: Complex64, multiplicity: usize) -> Option<Complex64> {
        let mut z = start;
        for _ in 0..100 {
            let step = self.cm.newton_ratio(z)? * multiplicity as f64;
            z -= step;
            if !z.is_finite() {
                return None;
            }
            if step.norm() <= 1e-15 * (1.0 + z.norm()) {
                break;
            }
        }
        Some(z)
    }

    fn search(&self, r: Rect, count: usize, depth: usize, out: &mut Vec<Root>) -> Result<(), SpectrumError> {
        if count == 0 {
            return Ok(());
        }
        let size = r.width().max(r.height());
        let tiny = size < MULTIPLE_ROOT_CELL * (1.0 + r.center().norm());
        if count == 1 || tiny || depth > 200 {
            let m = if count == 1 { 1 } else { count };
            if let Some(z) = self.newton(r.center(), m) {
                if r.contains(z, 1e-9 * (1.0 + z.norm()) + if tiny { size } else { 0.0 }) {
                    out.push(Root {
                        re: z.re,
                        im: z.im,
                        residual: self.cm.det(z).norm(),
                        multiplicity: m,
                    });
                    return Ok(());
                }
            }
            if tiny || depth > 200 {
                let z = r.center();
                out.push(Root {
                    re: z.re,
                    im: z.im,
                    residual: self.cm.det(z).norm(),
                    multiplicity: m,
                });
                return Ok(());
            }
        }
        // Split off-center so that symmetric root sets do not land on edges.
        let mut last = None;
        for frac in [0.5 + 1.0 / 97.0, 0.5 - 1.0 / 61.0, 0.5 + 1.0 / 29.0, 0.41] {
            let (a, b) = r.split(frac);
            match (self.winding(&a), self.winding(&b)) {
                (Ok(ca), Ok(cb)) if ca + cb == count => {
                    self.search(a, ca, depth + 1, out)?;
                    return self.search(b, cb, depth + 1, out);
                }
                (Err(e), _) | (_, Err(e)) => last = Some(e),
                _ => last = Some(SpectrumError::NonIntegralWinding(count as f64)),
            }
        }
        Err(last.expect("loop ran"))
    }
}

fn tidy(mut roots: Vec<Root>, cm: &CharacteristicMatrix) -> Vec<Root> {
    roots.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    let mut merged: Vec<Root> = Vec::new();
    for r in roots {
        if let Some(m) = merged
            .iter_mut()
            .find(|m| (m.z() - r.z()).norm() < DEDUP_RADIUS * (1.0 + r.z().norm()))
        {
            m.multiplicity = m.multiplicity.max(r.multiplicity);
            continue;
        }
        merged.push(r);
    }
    // real coefficients: pair each root with its conjugate
    let mut out: Vec<Root> = Vec::with_capacity(merged.len());
    for r in merged {
        let tol = DEDUP_RADIUS * (1.0 + r.z().norm());
        if r.im.abs() < tol {
            let z = Complex64::new(r.re, 0.0);
            out.push(Root {
                im: 0.0,
                residual: cm.det(z).norm().min(r.residual),
                ..r
            });
        } else {
            let upper = Root { im: r.im.abs(), ..r.clone() };
            if !out.iter().any(|o| (o.z() - upper.z()).norm() < tol) {
                out.push(upper);
            }
        }
    }
    let mut full = Vec::with_capacity(2 * out.len());
    for r in out {
        if r.im > 0.0 {
            full.push(Root { im: -r.im, ..r.clone() });
        }
        full.push(r);
    }
    full.sort_by(|a, b| b.re.total_cmp(&a.re).then(b.im.total_cmp(&a.im)));
    full
}

/// All characteristic roots in `region`, polished by Newton's method.
pub fn find_roots(spec: &EquationSpec, region: Rect) -> Result<SpectralReport, SpectrumError> {
    if !(region.width() > 0.0 && region.height() > 0.0) || ![region.re0, region.re1, region.im0, region.im1].iter().all(|v| v.is_finite()) {
        return Err(SpectrumError::InvalidRegion(region));
    }
    let cm = CharacteristicMatrix::new(spec);
    let (a0, a1) = cm.envelope();
    let finder = Finder {
        scale: 1.0 + a0 + a1 + region.re0.abs().max(region.re1.abs()) + region.im0.abs().max(region.im1.abs()),
        cm,
    };
    let winding = finder.winding(&region)?;
    let mut roots = Vec::new();
    finder.search(region, winding, 0, &mut roots)?;
    let roots: Vec<Root> = tidy(roots, &finder.cm)
        .into_iter()
        .filter(|r| region.contains(r.z(), 1e-9 * (1.0 + r.z().norm())))
        .collect();
    Ok(SpectralReport {
        abscissa: roots.iter().map(|r| r.re).reduce(f64::max),
        roots,
        region,
        winding,
    })
}

/// Rightmost root found by growing the search region to the left until it
/// contains at least one root, capped at `Re z = -50 / r`.
pub fn spectral_report(spec: &EquationSpec) -> Result<SpectralReport, SpectrumError> {
    let cm = CharacteristicMatrix::new(spec);
    let (a0, a1) = cm.envelope();
    let r = spec.delay;
    // |z| <= ‖A₀‖ + ‖A₁‖|π| whenever Re z >= 0
    let right = a0 + a1 + 1.0 + 0.0123;
    let floor = -50.0 / r;
    let mut left = -0.5 - 0.0371;
    loop {
        let height = cm.imag_bound(left) + 0.0217;
        if height > 1e4 {
            return Err(SpectrumError::RegionLimit(left));
        }
        let region = Rect::new(left, right, -height, height);
        match find_roots(spec, region) {
            Ok(report) if !report.roots.is_empty() => return Ok(report),
            Ok(_) => {}
            Err(SpectrumError::BoundaryRoot(_)) | Err(SpectrumError::NonIntegralWinding(_)) => {
                left -= 0.0173 * (1.0 + left.abs());
                continue;
            }
            Err(e) => return Err(e),
        }
        if left <= floor {
            return Err(SpectrumError::RegionLimit(left));
        }
        left = (2.0 * left - 0.1237).max(floor);
    }
}

/// `λ₁ = max Re z` over characteristic roots.
pub fn spectral_abscissa(spec: &EquationSpec) -> Result<f64, SpectrumError> {
    Ok(spectral_report(spec)?.abscissa.expect("report has roots"))
}

/// Method of steps for the deterministic equation `ẏ = A(y_t, ∫ y_{t+θ} π(dθ))`
/// with Heun's rule and trapezoid weights for densities.
#[derive(Clone, Debug)]
pub struct DelaySemigroup {
    current: DMatrix<f64>,
    memory: DMatrix<f64>,
    weights: DiscreteMeasure,
    step: f64,
    delay_steps: usize,
    dim: usize,
}

impl DelaySemigroup {
    pub fn new(spec: &EquationSpec, step: f64) -> Result<Self, SpectrumError> {
        let delay_steps = spec.delay_steps(step)?;
        Ok(DelaySemigroup {
            current: spec.drift.current.clone(),
            memory: spec.drift.memory.clone(),
            weights: spec.measure.discretize(spec.dim, step, spec.delay)?,
            step,
            delay_steps,
            dim: spec.dim,
        })
    }

    pub fn delay_steps(&self) -> usize {
        self.delay_steps
    }

    fn memory_term(&self, hist: &[DVector<f64>], head: Option<&DVector<f64>>) -> DVector<f64> {
        // hist ends at the node the integral is taken at, unless `head`
        // supplies that node.
        let last = hist.len() - 1;
        let mut z = DVector::zeros(self.dim);
        for (lag, w) in &self.weights.lags {
            let v = match head {
                Some(h) if *lag == 0 => h,
                Some(_) => &hist[last + 1 - lag],
                None => &hist[last - lag],
            };
            z += w * v;
        }
        z
    }

    /// Nodes `-k..=steps` of the solution started from `xi` (`k + 1` nodes
    /// on `[-r, 0]`).
    pub fn trajectory(&self, xi: &[DVector<f64>], steps: usize) -> Result<Vec<DVector<f64>>, SpectrumError> {
        let k = self.delay_steps;
        if xi.len() != k + 1 {
            return Err(SpectrumError::InitialWindow {
                got: xi.len(),
                expected: k + 1,
            });
        }
        let h = self.step;
        let mut y = xi.to_vec();
        y.reserve(steps);
        for _ in 0..steps {
            let cur = y.last().expect("non-empty").clone();
            let f0 = &self.current * &cur + &self.memory * self.memory_term(&y, None);
            let pred = &cur + &f0 * h;
            let f1 = &self.current * &pred + &self.memory * self.memory_term(&y, Some(&pred));
            y.push(cur + (f0 + f1) * (0.5 * h));
        }
        Ok(y)
    }

    /// `T_t ξ`: the segment on `[t - r, t]`.
    pub fn apply(&self, xi: &[DVector<f64>], steps: usize) -> Result<Vec<DVector<f64>>, SpectrumError> {
        let y = self.trajectory(xi, steps)?;
        Ok(y[steps..].to_vec())
    }
}

/// `T_t ξ` for the drift and delay measure of `spec`, `t = steps · step`.
pub fn semigroup_apply(spec: &EquationSpec, xi: &[DVector<f64>], step: f64, t: f64) -> Result<Vec<DVector<f64>>, SpectrumError> {
    let sg = DelaySemigroup::new(spec, step)?;
    let steps = (t / step).round() as usize;
    sg.apply(xi, steps)
}

/// Least-squares slope of `y` against `x`.
pub fn ls_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Slope of `t ↦ log sup_{[t-r, t]} |y|` over nodes in `[steps/2, steps]`.
pub fn log_sup_slope(values: &[DVector<f64>], delay_steps: usize, step: f64) -> Option<f64> {
    let steps = values.len() - 1 - delay_steps;
    let (mut ts, mut ls) = (Vec::new(), Vec::new());
    let stride = (delay_steps / 4).max(1);
    let mut j = steps / 2;
    while j <= steps {
        let sup = values[j..=j + delay_steps].iter().map(|v| v.norm()).fold(0.0, f64::max);
        if !(sup > 0.0) || !sup.is_finite() {
            return None;
        }
        ts.push(j as f64 * step);
        ls.push(sup.ln());
        j += stride;
    }
    (ts.len() >= 2).then(|| ls_slope(&ts, &ls))
}

/// Largest decay slope over a basis of initial segments: per coordinate a
/// constant, a ramp and one oscillation over `[-r, 0]`.
pub fn decay_rate_estimate(spec: &EquationSpec, horizon: f64, step: f64) -> Result<f64, SpectrumError> {
    let sg = DelaySemigroup::new(spec, step)?;
    let k = sg.delay_steps;
    let steps = (horizon / step).round() as usize;
    let n = spec.dim;
    let shapes: [fn(f64) -> f64; 3] = [|_| 1.0, |s| 1.0 + s, |s| (2.0 * PI * s).sin() + 0.5];
    let mut best = f64::NEG_INFINITY;
    for e in 0..n {
        for shape in shapes {
            let xi: Vec<DVector<f64>> = (0..=k)
                .map(|i| {
                    let s = i as f64 / k as f64 - 1.0;
                    let mut v = DVector::zeros(n);
                    v[e] = shape(s);
                    v
                })
                .collect();
            let y = sg.trajectory(&xi, steps)?;
            if let Some(s) = log_sup_slope(&y, k, step) {
                best = best.max(s);
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::equation::{DelayAtom, LinearDrift, SignedDelayMeasure};
    use crate::diffusion::SeparableDiffusion;
    use std::sync::Arc;

    fn dde(a: f64, b: f64, r: f64) -> EquationSpec {
        EquationSpec::scalar_dde(a, b, r).unwrap()
    }

    #[test]
    fn scalar_determinant_formula() {
        let spec = dde(0.3, -0.7, 1.3);
        for z in [Complex64::new(0.2, 1.0), Complex64::new(-2.0, -3.0)] {
            let expect = z - 0.3 + 0.7 * (-z * 1.3).exp();
            assert!((char_det(&spec, z) - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn zero_drift_gives_power() {
        let spec = EquationSpec::new(
            LinearDrift::zero(2),
            SignedDelayMeasure::none(),
            Arc::new(SeparableDiffusion::zero(2, 1)),
            1.0,
        )
        .unwrap();
        let z = Complex64::new(0.4, -0.9);
        assert!((char_det(&spec, z) - z * z).norm() < 1e-15);
        let rep = find_roots(&spec, Rect::new(-1.0, 1.0, -1.0, 1.0)).unwrap();
        assert_eq!(rep.winding, 2);
        assert_eq!(rep.roots.len(), 1);
        assert_eq!(rep.roots[0].multiplicity, 2);
        assert!(rep.roots[0].z().norm() < 1e-6);
    }

    #[test]
    fn ode_root() {
        let rep = find_roots(&dde(-1.0, 0.0, 1.0), Rect::new(-3.0, 2.0, -2.0, 2.0)).unwrap();
        assert_eq!(rep.roots.len(), 1);
        assert!((rep.roots[0].re + 1.0).abs() < 1e-12);
        assert!((spectral_abscissa(&dde(-1.0, 0.0, 1.0)).unwrap() + 1.0).abs() < 1e-12);
    }

    #[test]
    fn boundary_case_roots_on_axis() {
        let r = 1.0;
        let spec = dde(0.0, -PI / (2.0 * r), r);
        assert!(char_det(&spec, Complex64::new(0.0, PI / (2.0 * r))).norm() < 1e-12);
        let rep = find_roots(&spec, Rect::new(-2.0, 1.0, -5.0, 5.0)).unwrap();
        assert!(rep.abscissa.unwrap().abs() < 1e-8);
        assert!(rep.roots.iter().all(|z| z.residual < 1e-8));
        assert!(spectral_abscissa(&spec).unwrap().abs() < 1e-8);
    }

    #[test]
    fn conjugate_pairs_and_counts() {
        let spec = dde(0.2, -1.5, 1.0);
        let rep = find_roots(&spec, Rect::new(-3.0, 2.0, -30.0, 30.0)).unwrap();
        assert_eq!(rep.root_count(), rep.winding);
        for z in &rep.roots {
            assert!(z.residual < 1e-8);
            assert!(rep.roots.iter().any(|w| (w.z() - z.z().conj()).norm() < 1e-9));
        }
        // Newton can land on the lower conjugate before the upper one
        let rep = find_roots(&dde(0.0, -0.5, 1.0), Rect::new(-3.0, 1.0, -20.0, 20.0)).unwrap();
        assert_eq!(rep.winding, 4);
        assert_eq!(rep.root_count(), 4);
    }

    #[test]
    fn density_measure_roots_are_zeros() {
        let spec = EquationSpec::new(
            LinearDrift::new(DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.0, -0.3]), DMatrix::from_row_slice(2, 2, &[0.2, 0.0, -0.4, 0.1])),
            SignedDelayMeasure {
                atoms: vec![DelayAtom {
                    location: -0.5,
                    weight: DMatrix::identity(2, 2),
                }],
                density: vec![crate::equation::DensityPiece {
                    from: -1.0,
                    to: 0.0,
                    weight: DMatrix::identity(2, 2) * 0.7,
                }],
            },
            Arc::new(SeparableDiffusion::zero(2, 1)),
            1.0,
        )
        .unwrap();
        let rep = spectral_report(&spec).unwrap();
        assert!(rep.roots.iter().all(|z| z.residual < 1e-8));
        assert_eq!(rep.root_count(), rep.winding);
    }

    #[test]
    fn semigroup_pure_delay_and_identity() {
        let spec = dde(0.0, 1.0, 1.0);
        let sg = DelaySemigroup::new(&spec, 1e-3).unwrap();
        let xi = vec![DVector::from_element(1, 1.0); 1001];
        assert_eq!(sg.apply(&xi, 0).unwrap(), xi);
        assert!((sg.apply(&xi, 1000).unwrap()[1000][0] - 2.0).abs() < 1e-4);
        assert!((sg.apply(&xi, 2000).unwrap()[1000][0] - 3.5).abs() < 1e-4);
        let once = sg.apply(&sg.apply(&xi, 700).unwrap(), 900).unwrap();
        assert_eq!(once, sg.apply(&xi, 1600).unwrap());
    }

    #[test]
    fn decay_rate_of_ode() {
        let spec = dde(-1.0, 0.0, 1.0);
        assert!((decay_rate_estimate(&spec, 30.0, 0.01).unwrap() + 1.0).abs() < 1e-2);
    }
}
