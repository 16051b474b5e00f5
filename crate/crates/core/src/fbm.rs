//! Exact sampling of multidimensional two-sided fractional Brownian motion.
//!
//! Paths are drawn on a uniform grid `t_k = (k - origin) * h` as a single
//! Gaussian vector of increments (fractional Gaussian noise) and then
//! re-zeroed at the origin node so that `B_0 = 0`.  Two exact methods are
//! available: a Cholesky factor of the Toeplitz increment covariance
//! (computed by the Schur algorithm in `O(N^2)`), and, behind the
//! `circulant` feature, Davies-Harte circulant embedding.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest number of increments the Cholesky factor is built for. The packed
/// factor needs `N(N+1)/2` doubles.
pub const MAX_CHOLESKY_STEPS: usize = 8192;

/// Largest number of increments accepted by any exact method.
pub const MAX_EXACT_STEPS: usize = 100_000;

const ALIGN_TOL: f64 = 1e-9;

#[derive(Debug, Error, PartialEq)]
pub enum FbmError {
    #[error("Hurst parameter {0} outside (1/3, 1)")]
    InvalidHurst(f64),
    #[error("grid is not uniform: {0}")]
    NonUniformGrid(String),
    #[error("{steps} increments exceed the limit of {limit} for the {method} sampler")]
    TooManySteps {
        steps: usize,
        limit: usize,
        method: &'static str,
    },
    #[error("dimension must be positive")]
    ZeroDimension,
    #[error("increment covariance is not positive definite at row {0}")]
    NotPositiveDefinite(usize),
}

/// Hurst index of a fractional Brownian motion, restricted to `(1/3, 1)`.
///
/// Values above 1/2 are accepted so that Young-regime drivers can be used to
/// cross-check the rough integrator.
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct Hurst(f64);

impl Hurst {
    pub fn new(value: f64) -> Result<Self, FbmError> {
        if value.is_finite() && value > 1.0 / 3.0 && value < 1.0 {
            Ok(Hurst(value))
        } else {
            Err(FbmError::InvalidHurst(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for Hurst {
    type Error = FbmError;
    fn try_from(value: f64) -> Result<Self, Self::Error> {
        Hurst::new(value)
    }
}

impl From<Hurst> for f64 {
    fn from(h: Hurst) -> f64 {
        h.0
    }
}

/// Covariance `R_H(s,t) = (|t|^{2H} + |s|^{2H} - |t-s|^{2H}) / 2` of a
/// two-sided fBm.
pub fn fbm_covariance(s: f64, t: f64, hurst: Hurst) -> f64 {
    let two_h = 2.0 * hurst.0;
    0.5 * (t.abs().powf(two_h) + s.abs().powf(two_h) - (t - s).abs().powf(two_h))
}

/// Autocovariance at lag `k` of the increments of an fBm sampled with step
/// `step`.
pub fn fgn_autocovariance(lag: usize, step: f64, hurst: Hurst) -> f64 {
    let two_h = 2.0 * hurst.0;
    let k = lag as f64;
    let core = if lag == 0 {
        1.0
    } else {
        0.5 * ((k + 1.0).powf(two_h) - 2.0 * k.powf(two_h) + (k - 1.0).powf(two_h))
    };
    step.powf(two_h) * core
}

/// Uniform time grid `t_k = (k - origin_index) * step`, `k = 0..len`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UniformGrid {
    step: f64,
    len: usize,
    origin_index: usize,
}

impl UniformGrid {
    /// Grid with `left_steps` nodes before the origin and `right_steps` after.
    pub fn new(step: f64, left_steps: usize, right_steps: usize) -> Result<Self, FbmError> {
        if !(step.is_finite() && step > 0.0) {
            return Err(FbmError::NonUniformGrid(format!("step {step} must be positive")));
        }
        Ok(UniformGrid {
            step,
            len: left_steps + right_steps + 1,
            origin_index: left_steps,
        })
    }

    /// Grid covering `[-t_minus, t_plus]`; both ends must be multiples of `step`.
    pub fn from_span(step: f64, t_minus: f64, t_plus: f64) -> Result<Self, FbmError> {
        let left = aligned_steps(t_minus, step)?;
        let right = aligned_steps(t_plus, step)?;
        UniformGrid::new(step, left, right)
    }

    /// Rebuild a grid from explicit node times. The times must be uniformly
    /// spaced and contain `0`.
    pub fn from_times(times: &[f64]) -> Result<Self, FbmError> {
        if times.len() < 2 {
            return Err(FbmError::NonUniformGrid("need at least two nodes".into()));
        }
        let step = times[1] - times[0];
        if !(step > 0.0) {
            return Err(FbmError::NonUniformGrid("times must increase".into()));
        }
        let scale = times.iter().fold(1.0f64, |m, t| m.max(t.abs()));
        for (k, w) in times.windows(2).enumerate() {
            if ((w[1] - w[0]) - step).abs() > 1e-7 * scale {
                return Err(FbmError::NonUniformGrid(format!(
                    "spacing {} at node {} differs from {step}",
                    w[1] - w[0],
                    k + 1
                )));
            }
        }
        let origin = (-times[0] / step).round();
        if origin < 0.0 || origin as usize >= times.len() || times[origin as usize].abs() > 1e-7 * scale {
            return Err(FbmError::NonUniformGrid("grid does not contain t = 0".into()));
        }
        Ok(UniformGrid {
            step,
            len: times.len(),
            origin_index: origin as usize,
        })
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    /// Number of nodes.
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Number of cells (`len - 1`).
    pub fn cells(&self) -> usize {
        self.len.saturating_sub(1)
    }

    pub fn origin_index(&self) -> usize {
        self.origin_index
    }

    pub fn time(&self, k: usize) -> f64 {
        (k as f64 - self.origin_index as f64) * self.step
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.len).map(|k| self.time(k)).collect()
    }

    /// Node index of time `t`, if `t` lies on the grid.
    pub fn index_of(&self, t: f64) -> Option<usize> {
        let k = t / self.step + self.origin_index as f64;
        let r = k.round();
        if (k - r).abs() > ALIGN_TOL * k.abs().max(1.0) || r < 0.0 || r as usize >= self.len {
            None
        } else {
            Some(r as usize)
        }
    }
}

fn aligned_steps(span: f64, step: f64) -> Result<usize, FbmError> {
    if !(span >= 0.0) || !(step > 0.0) {
        return Err(FbmError::NonUniformGrid(format!("invalid span {span} or step {step}")));
    }
    let k = span / step;
    let r = k.round();
    if (k - r).abs() > ALIGN_TOL * k.max(1.0) {
        return Err(FbmError::NonUniformGrid(format!("span {span} is not a multiple of step {step}")));
    }
    Ok(r as usize)
}

/// A `d`-dimensional path sampled on a uniform grid, stored node-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampledPath {
    grid: UniformGrid,
    dim: usize,
    values: Vec<f64>,
}

impl SampledPath {
    /// `values` holds `grid.len() * dim` entries, node-major.
    pub fn new(grid: UniformGrid, dim: usize, values: Vec<f64>) -> Result<Self, FbmError> {
        if dim == 0 {
            return Err(FbmError::ZeroDimension);
        }
        if values.len() != grid.len() * dim {
            return Err(FbmError::NonUniformGrid(format!(
                "expected {} values, got {}",
                grid.len() * dim,
                values.len()
            )));
        }
        Ok(SampledPath { grid, dim, values })
    }

    /// Sample a function of time on the grid.
    pub fn from_fn(grid: UniformGrid, dim: usize, f: impl Fn(f64) -> Vec<f64>) -> Result<Self, FbmError> {
        let mut values = Vec::with_capacity(grid.len() * dim);
        for k in 0..grid.len() {
            let v = f(grid.time(k));
            assert_eq!(v.len(), dim, "path function returned wrong dimension");
            values.extend_from_slice(&v);
        }
        SampledPath::new(grid, dim, values)
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin_index(&self) -> usize {
        self.grid.origin_index
    }

    pub fn value(&self, k: usize) -> &[f64] {
        &self.values[k * self.dim..(k + 1) * self.dim]
    }

    pub fn component(&self, k: usize, c: usize) -> f64 {
        self.values[k * self.dim + c]
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    /// Keep every `factor`-th node, preserving the origin. The origin index
    /// and the node count beyond it must be divisible by `factor`.
    pub fn coarsen(&self, factor: usize) -> Result<SampledPath, FbmError> {
        let o = self.grid.origin_index;
        let right = self.grid.len - 1 - o;
        if factor == 0 || o % factor != 0 || right % factor != 0 {
            return Err(FbmError::NonUniformGrid(format!("cannot coarsen by {factor}")));
        }
        let grid = UniformGrid::new(self.grid.step * factor as f64, o / factor, right / factor)?;
        let values = (0..grid.len())
            .flat_map(|k| self.value(k * factor).to_vec())
            .collect();
        SampledPath::new(grid, self.dim, values)
    }
}

/// Which exact Gaussian sampler to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SamplingMethod {
    /// Cholesky for short grids, circulant embedding (when compiled in) beyond
    /// [`MAX_CHOLESKY_STEPS`].
    Auto,
    Cholesky,
    #[cfg(feature = "circulant")]
    Circulant,
}

enum Factor {
    /// Packed lower-triangular Cholesky factor, column-major by row start.
    Cholesky(Vec<f64>),
    #[cfg(feature = "circulant")]
    Circulant(circulant::Embedding),
}

/// Reusable exact sampler for a fixed grid, Hurst index and dimension.
pub struct FbmSampler {
    grid: UniformGrid,
    hurst: Hurst,
    dim: usize,
    factor: Factor,
}

impl FbmSampler {
    pub fn new(grid: UniformGrid, hurst: Hurst, dim: usize) -> Result<Self, FbmError> {
        FbmSampler::with_method(grid, hurst, dim, SamplingMethod::Auto)
    }

    pub fn with_method(
        grid: UniformGrid,
        hurst: Hurst,
        dim: usize,
        method: SamplingMethod,
    ) -> Result<Self, FbmError> {
        if dim == 0 {
            return Err(FbmError::ZeroDimension);
        }
        let steps = grid.cells();
        if steps > MAX_EXACT_STEPS {
            return Err(FbmError::TooManySteps {
                steps,
                limit: MAX_EXACT_STEPS,
                method: "exact",
            });
        }
        let autocov: Vec<f64> = (0..=steps)
            .map(|k| fgn_autocovariance(k, grid.step(), hurst))
            .collect();
        let factor = match method {
            SamplingMethod::Cholesky => {
                if steps > MAX_CHOLESKY_STEPS {
                    return Err(FbmError::TooManySteps {
                        steps,
                        limit: MAX_CHOLESKY_STEPS,
                        method: "cholesky",
                    });
                }
                Factor::Cholesky(toeplitz_cholesky(&autocov[..steps])?)
            }
            #[cfg(feature = "circulant")]
            SamplingMethod::Circulant => Factor::Circulant(circulant::Embedding::new(&autocov)?),
            SamplingMethod::Auto => {
                if steps <= MAX_CHOLESKY_STEPS {
                    Factor::Cholesky(toeplitz_cholesky(&autocov[..steps])?)
                } else {
                    #[cfg(feature = "circulant")]
                    {
                        Factor::Circulant(circulant::Embedding::new(&autocov)?)
                    }
                    #[cfg(not(feature = "circulant"))]
                    {
                        return Err(FbmError::TooManySteps {
                            steps,
                            limit: MAX_CHOLESKY_STEPS,
                            method: "cholesky",
                        });
                    }
                }
            }
        };
        Ok(FbmSampler {
            grid,
            hurst,
            dim,
            factor,
        })
    }

    pub fn grid(&self) -> &UniformGrid {
        &self.grid
    }

    pub fn hurst(&self) -> Hurst {
        self.hurst
    }

    /// Draw path number `path_index` of the stream identified by `seed`.
    /// Each path uses its own ChaCha stream, so the result does not depend on
    /// how many other paths are drawn or in which order.
    pub fn sample_path(&self, seed: u64, path_index: u64) -> SampledPath {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(path_index);
        let steps = self.grid.cells();
        let nodes = self.grid.len();
        let mut values = vec![0.0; nodes * self.dim];
        let mut increments = vec![0.0; steps];
        for c in 0..self.dim {
            match &self.factor {
                Factor::Cholesky(packed) => {
                    let z: Vec<f64> = (0..steps).map(|_| StandardNormal.sample(&mut rng)).collect();
                    lower_packed_mul(packed, &z, &mut increments);
                }
                #[cfg(feature = "circulant")]
                Factor::Circulant(emb) => emb.sample(&mut rng, &mut increments),
            }
            let mut acc = 0.0;
            values[c] = 0.0;
            for (k, inc) in increments.iter().enumerate() {
                acc += inc;
                values[(k + 1) * self.dim + c] = acc;
            }
            let o = self.grid.origin_index;
            let at_origin = values[o * self.dim + c];
            for k in 0..nodes {
                values[k * self.dim + c] -= at_origin;
            }
        }
        SampledPath {
            grid: self.grid.clone(),
            dim: self.dim,
            values,
        }
    }

    /// Draw paths `0..n_paths` in parallel; output order is by path index.
    pub fn sample(&self, seed: u64, n_paths: usize) -> Vec<SampledPath> {
        (0..n_paths as u64)
            .into_par_iter()
            .map(|i| self.sample_path(seed, i))
            .collect()
    }
}

/// Convenience wrapper building a sampler and drawing `n_paths` paths.
pub fn sample_fbm(
    grid: &UniformGrid,
    hurst: Hurst,
    dim: usize,
    seed: u64,
    n_paths: usize,
) -> Result<Vec<SampledPath>, FbmError> {
    let sampler = FbmSampler::new(grid.clone(), hurst, dim)?;
    Ok(sampler.sample(seed, n_paths))
}

/// Index of `L[i][j]` (`j <= i`) in the packed row-major lower triangle.
#[inline]
fn packed(i: usize, j: usize) -> usize {
    i * (i + 1) / 2 + j
}

fn lower_packed_mul(l: &[f64], z: &[f64], out: &mut [f64]) {
    for (i, o) in out.iter_mut().enumerate() {
        let row = &l[packed(i, 0)..=packed(i, i)];
        *o = row.iter().zip(z).map(|(a, b)| a * b).sum();
    }
}

/// Cholesky factor of the symmetric Toeplitz matrix with first column `c`,
/// via the Schur (hyperbolic rotation) algorithm. Returned packed row-major.
fn toeplitz_cholesky(c: &[f64]) -> Result<Vec<f64>, FbmError> {
    let n = c.len();
    let mut l = vec![0.0; n * (n + 1) / 2];
    if n == 0 {
        return Ok(l);
    }
    if !(c[0] > 0.0) {
        return Err(FbmError::NotPositiveDefinite(0));
    }
    let s0 = c[0].sqrt();
    let mut u: Vec<f64> = c.iter().map(|x| x / s0).collect();
    let mut v = u.clone();
    v[0] = 0.0;
    for k in 0..n {
        for i in k..n {
            l[packed(i, k)] = u[i];
        }
        if k + 1 == n {
            break;
        }
        // shift the first generator down by one position
        for i in (k + 1..n).rev() {
            u[i] = u[i - 1];
        }
        u[k] = 0.0;
        let rho = v[k + 1] / u[k + 1];
        let s2 = 1.0 - rho * rho;
        if !(s2 > 0.0) {
            return Err(FbmError::NotPositiveDefinite(k + 1));
        }
        let s = s2.sqrt();
        for i in k + 1..n {
            let (a, b) = (u[i], v[i]);
            u[i] = (a - rho * b) / s;
            v[i] = (b - rho * a) / s;
        }
    }
    Ok(l)
}

#[cfg(feature = "circulant")]
mod circulant {
    use super::FbmError;
    use num_complex::Complex64;
    use rand::Rng;
    use rand_distr::{Distribution, StandardNormal};
    use rustfft::FftPlanner;
    use std::sync::Arc;

    /// Davies-Harte embedding of an `N x N` Toeplitz covariance into a
    /// `2N x 2N` circulant matrix.
    pub(super) struct Embedding {
        steps: usize,
        sqrt_eig: Vec<f64>,
        fft: Arc<dyn rustfft::Fft<f64>>,
    }

    impl Embedding {
        /// `autocov` holds lags `0..=N`.
        pub(super) fn new(autocov: &[f64]) -> Result<Self, FbmError> {
            let steps = autocov.len() - 1;
            let m = 2 * steps;
            let mut row: Vec<Complex64> = Vec::with_capacity(m);
            row.extend(autocov.iter().map(|&g| Complex64::new(g, 0.0)));
            row.extend(autocov[1..steps].iter().rev().map(|&g| Complex64::new(g, 0.0)));
            let fft = FftPlanner::new().plan_fft_forward(m);
            fft.process(&mut row);
            let scale = row.iter().map(|z| z.re.abs()).fold(0.0, f64::max);
            let mut sqrt_eig = Vec::with_capacity(m);
            for (k, z) in row.iter().enumerate() {
                if z.re < -1e-10 * scale {
                    return Err(FbmError::NotPositiveDefinite(k));
                }
                sqrt_eig.push(z.re.max(0.0).sqrt());
            }
            Ok(Embedding { steps, sqrt_eig, fft })
        }

        pub(super) fn sample<R: Rng>(&self, rng: &mut R, out: &mut [f64]) {
            let n = self.steps;
            let m = 2 * n;
            let mut w = vec![Complex64::new(0.0, 0.0); m];
            let norm = 1.0 / (m as f64).sqrt();
            let z0: f64 = StandardNormal.sample(rng);
            w[0] = Complex64::new(self.sqrt_eig[0] * z0 * norm, 0.0);
            let zn: f64 = StandardNormal.sample(rng);
            w[n] = Complex64::new(self.sqrt_eig[n] * zn * norm, 0.0);
            for k in 1..n {
                let a: f64 = StandardNormal.sample(rng);
                let b: f64 = StandardNormal.sample(rng);
                let s = self.sqrt_eig[k] * norm * std::f64::consts::FRAC_1_SQRT_2;
                w[k] = Complex64::new(s * a, s * b);
                w[m - k] = w[k].conj();
            }
            self.fft.process(&mut w);
            for (o, z) in out.iter_mut().zip(&w) {
                *o = z.re;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn h(x: f64) -> Hurst {
        Hurst::new(x).unwrap()
    }

    #[test]
    fn covariance_examples() {
        let hh = h(0.4);
        assert!((fbm_covariance(0.7, 0.7, hh) - 0.7f64.powf(0.8)).abs() < 1e-15);
        assert!((fbm_covariance(1.0, 2.0, h(0.5)) - 1.0).abs() < 1e-15);
        assert!(fbm_covariance(1.0, -1.0, h(0.5)).abs() < 1e-15);
    }

    #[test]
    fn hurst_bounds() {
        assert!(Hurst::new(1.0 / 3.0).is_err());
        assert!(Hurst::new(1.0).is_err());
        assert!(Hurst::new(f64::NAN).is_err());
        assert!(Hurst::new(0.34).is_ok());
        assert!(Hurst::new(0.75).is_ok());
    }

    #[test]
    fn schur_cholesky_reproduces_toeplitz() {
        let c: Vec<f64> = (0..12).map(|k| fgn_autocovariance(k, 0.1, h(0.37))).collect();
        let l = toeplitz_cholesky(&c).unwrap();
        let n = c.len();
        for i in 0..n {
            for j in 0..=i {
                let s: f64 = (0..=j).map(|m| l[packed(i, m)] * l[packed(j, m)]).sum();
                assert!((s - c[i - j]).abs() < 1e-13, "({i},{j}) {s} vs {}", c[i - j]);
            }
        }
    }

    #[test]
    fn grid_from_times_rejects_nonuniform() {
        assert!(UniformGrid::from_times(&[-0.1, 0.0, 0.1, 0.2]).is_ok());
        assert!(matches!(
            UniformGrid::from_times(&[0.0, 0.1, 0.25]),
            Err(FbmError::NonUniformGrid(_))
        ));
        assert!(UniformGrid::from_span(0.1, 0.25, 1.0).is_err());
    }

    #[test]
    fn origin_is_zero_and_sampling_is_deterministic() {
        let grid = UniformGrid::from_span(0.01, 0.3, 0.5).unwrap();
        let s = FbmSampler::new(grid, h(0.4), 3).unwrap();
        let a = s.sample_path(9, 4);
        let b = s.sample_path(9, 4);
        assert_eq!(a, b);
        assert!(a.value(a.origin_index()).iter().all(|&x| x == 0.0));
        assert_ne!(a, s.sample_path(9, 5));
    }

    #[test]
    fn too_many_steps_rejected() {
        let grid = UniformGrid::new(1e-3, 0, MAX_EXACT_STEPS + 1).unwrap();
        assert!(matches!(
            FbmSampler::new(grid, h(0.4), 1),
            Err(FbmError::TooManySteps { .. })
        ));
        let grid = UniformGrid::new(1e-3, 0, MAX_CHOLESKY_STEPS + 1).unwrap();
        assert!(matches!(
            FbmSampler::with_method(grid, h(0.4), 1, SamplingMethod::Cholesky),
            Err(FbmError::TooManySteps { .. })
        ));
    }

    #[test]
    fn coarsen_keeps_origin() {
        let grid = UniformGrid::from_span(0.25, 1.0, 2.0).unwrap();
        let p = SampledPath::from_fn(grid, 1, |t| vec![t * t]).unwrap();
        let c = p.coarsen(2).unwrap();
        assert_eq!(c.grid().step(), 0.5);
        assert_eq!(c.origin_index(), 2);
        assert_eq!(c.value(c.grid().len() - 1), &[4.0]);
        assert!(p.coarsen(3).is_err());
    }
}
